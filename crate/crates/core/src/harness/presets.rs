//! Shipped experiment documents.

/// `(name, document)` for every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../configs/fig1a.cfg")),
    ("fig1b", include_str!("../../configs/fig1b.cfg")),
    ("fig1c", include_str!("../../configs/fig1c.cfg")),
    ("fig1d", include_str!("../../configs/fig1d.cfg")),
    ("smoke", include_str!("../../configs/smoke.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{parse_config, AlgorithmSpec, SweepParam};
    use crate::oracles::OracleKind;

    #[test]
    fn every_preset_parses() {
        for (name, text) in PRESETS {
            parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn fig1a_is_the_dimension_sweep() {
        let c = parse_config(preset("fig1a").unwrap()).unwrap();
        assert_eq!((c.env.k, c.env.horizon), (3, 2000));
        assert_eq!(c.sweep.param, SweepParam::M);
        assert_eq!(c.sweep.values.len(), 20);
        assert_eq!(c.sweep.values[..3], [10, 14, 19]);
        assert_eq!(c.sweep.values[18..], [96, 101]);
        assert_eq!(
            c.algorithms,
            vec![
                AlgorithmSpec::SquareCbwk(OracleKind::GlmtronNewton),
                AlgorithmSpec::SquareCbwk(OracleKind::Ogd),
                AlgorithmSpec::LinUcb
            ]
        );
        assert_eq!(c.seed_count, 10);
    }

    #[test]
    fn horizon_presets_cover_the_published_grid() {
        for name in ["fig1c", "fig1d"] {
            let c = parse_config(preset(name).unwrap()).unwrap();
            assert_eq!(c.sweep.values.len(), 111);
            assert_eq!(*c.sweep.values.last().unwrap(), 12000);
        }
    }
}
