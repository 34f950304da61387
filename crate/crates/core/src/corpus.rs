//! The bundled example programs. Each file starts with a
//! `-- backend: <name>` line naming the memory it runs on.

use crate::memory::Backend;

#[derive(Clone, Copy, Debug)]
pub struct Program {
    pub name: &'static str,
    pub source: &'static str,
    pub backend: Backend,
}

const SOURCES: &[(&str, &str)] = &[
    ("coin", include_str!("../programs/coin.pcf")),
    ("coin_prob", include_str!("../programs/coin_prob.pcf")),
    ("bell", include_str!("../programs/bell.pcf")),
    ("entangled", include_str!("../programs/entangled.pcf")),
    ("dup", include_str!("../programs/dup.pcf")),
    ("countdown", include_str!("../programs/countdown.pcf")),
    ("max", include_str!("../programs/max.pcf")),
    ("omega", include_str!("../programs/omega.pcf")),
    ("twice_rec", include_str!("../programs/twice_rec.pcf")),
    ("box_comm", include_str!("../programs/box_comm.pcf")),
    ("thrice", include_str!("../programs/thrice.pcf")),
    ("coins_pair", include_str!("../programs/coins_pair.pcf")),
];

/// The backend named by a `-- backend: <name>` line, if any.
pub fn declared_backend(source: &str) -> Option<Backend> {
    source.lines().find_map(|l| l.trim().strip_prefix("--")?.trim().strip_prefix("backend:")?.trim().parse().ok())
}

/// Every bundled program.
pub fn corpus() -> Vec<Program> {
    SOURCES
        .iter()
        .map(|(name, source)| Program {
            name,
            source,
            backend: declared_backend(source).unwrap_or_else(|| panic!("program {name} declares no backend")),
        })
        .collect()
}

pub fn get(name: &str) -> Option<Program> {
    corpus().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_program_declares_a_backend() {
        let all = corpus();
        assert!(all.len() >= 10);
        assert_eq!(get("coin").unwrap().backend, Backend::Quantum);
        assert_eq!(get("coin_prob").unwrap().backend, Backend::Prob);
        assert_eq!(get("max").unwrap().backend, Backend::Int);
    }

    #[test]
    fn header_parsing() {
        assert_eq!(declared_backend("-- backend: int\nnew"), Some(Backend::Int));
        assert_eq!(declared_backend("new"), None);
        assert_eq!(declared_backend("--backend:quantum"), Some(Backend::Quantum));
    }
}
