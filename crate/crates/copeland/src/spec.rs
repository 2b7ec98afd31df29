//! Model and set-family spec strings.
//!
//! Both use `kind[:key=value,...]`. A value starting with `@` names a file.
//!
//! Models: `btl`, `thurstone`, `btl_outlier`, `btl_mixture` (quality from
//! `w=@file` or equispaced with `spread`, default 4), `sst_diagonal`
//! (`gap`, `seed`), `planted` (`k`, `delta`), `adjacent_swap` (`delta0`,
//! `a`), `hamming_planted` (`k`, `delta0`, `order=@file`) and
//! `explicit:@matrix.csv`.
//!
//! Families: `exact`, `hamming:h=1`, `topband:eps=0.5`, `mult:eps=0.5`,
//! `add:eps=2`, `ranksum:eps=0.5` (each optionally `round=ceil`) and
//! `explicit:@sets.csv`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use copeland_core::model::{adjacent_swap_max_gap, ModelSpec, QualityVector};
use copeland_core::setfamily::{PositionSet, Requirement, Rounding, SetFamily};

use crate::error::{Error, Result};
use crate::io;

/// Default spread of equispaced quality vectors.
pub const DEFAULT_SPREAD: f64 = 4.0;

struct Params<'a> {
    spec: &'a str,
    kind: &'a str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut values = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = match item.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None if item.starts_with('@') => ("path", item),
                None => return Err(Error::usage(format!("`{spec}`: expected key=value, got `{item}`"))),
            };
            if values.insert(key, value).is_some() {
                return Err(Error::usage(format!("`{spec}`: key `{key}` given twice")));
            }
        }
        Ok(Self { spec, kind: kind.trim(), values })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| Error::usage(format!("`{}`: cannot parse {key} = `{v}`", self.spec)))
            }
        }
    }

    fn take_path(&mut self, key: &str) -> Result<Option<&'a Path>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => match v.strip_prefix('@') {
                Some(p) => Ok(Some(Path::new(p))),
                None => Err(Error::usage(format!("`{}`: {key} must be `@file`", self.spec))),
            },
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::usage(format!("`{}`: missing {key}", self.spec)))
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::usage(format!("`{}`: unknown key `{k}`", self.spec))),
        }
    }
}

/// Values the spec may leave out.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelDefaults {
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Seed for seeded models that do not fix their own.
    pub seed: u64,
}

/// A parsed model plus whether its seed was given explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTemplate {
    pub spec: ModelSpec,
    pub seed_fixed: bool,
}

impl ModelTemplate {
    pub fn quality(&self) -> Option<&QualityVector> {
        match &self.spec {
            ModelSpec::Btl { w }
            | ModelSpec::Thurstone { w }
            | ModelSpec::BtlOutlier { w, .. }
            | ModelSpec::BtlMixture { w, .. } => Some(w),
            _ => None,
        }
    }
}

fn need_n(p: &Params, n: Option<usize>) -> Result<usize> {
    n.ok_or_else(|| Error::usage(format!("`{}`: item count n not given", p.spec)))
}

fn quality(p: &mut Params, n: Option<usize>) -> Result<QualityVector> {
    let spread: Option<f64> = p.take("spread")?;
    match p.take_path("w")? {
        Some(path) => {
            if spread.is_some() {
                return Err(Error::usage(format!("`{}`: give either w or spread", p.spec)));
            }
            let w = io::read_values(path)?;
            if n.is_some_and(|n| n != w.len()) {
                return Err(Error::usage(format!(
                    "{}: {} qualities but n = {}",
                    path.display(),
                    w.len(),
                    n.unwrap_or_default()
                )));
            }
            QualityVector::new(w).map_err(|e| Error::from(e).context(path.display()))
        }
        None => Ok(QualityVector::equispaced(need_n(p, n)?, spread.unwrap_or(DEFAULT_SPREAD))?),
    }
}

pub fn parse_model(spec: &str, defaults: ModelDefaults) -> Result<ModelTemplate> {
    let mut p = Params::parse(spec)?;
    let n = defaults.n;
    let mut seed_fixed = true;
    let model = match p.kind {
        "btl" => ModelSpec::Btl { w: quality(&mut p, n)? },
        "thurstone" => ModelSpec::Thurstone { w: quality(&mut p, n)? },
        "btl_outlier" => {
            let w = quality(&mut p, n)?;
            let outlier = p.take("outlier")?.unwrap_or(w.len() - 1);
            ModelSpec::BtlOutlier { w, outlier }
        }
        "btl_mixture" => {
            let w = quality(&mut p, n)?;
            let lambda = p.take("lambda")?.unwrap_or(ModelSpec::DEFAULT_MIXTURE_WEIGHT);
            ModelSpec::BtlMixture { w, lambda }
        }
        "sst_diagonal" => {
            let n = need_n(&p, n)?;
            let gap = p.take("gap")?.unwrap_or(1.0 / (n.max(2) - 1) as f64);
            let seed = match p.take("seed")? {
                Some(s) => s,
                None => {
                    seed_fixed = false;
                    defaults.seed
                }
            };
            ModelSpec::SstDiagonal { n, gap, seed }
        }
        "planted" => {
            let n = need_n(&p, n)?;
            let k = p.take("k")?.or(defaults.k).ok_or_else(|| Error::usage("planted: missing k"))?;
            ModelSpec::Planted { n, k, delta: p.require("delta")? }
        }
        "adjacent_swap" => {
            let n = need_n(&p, n)?;
            let delta0 = p.take("delta0")?.unwrap_or(adjacent_swap_max_gap(n));
            ModelSpec::AdjacentSwap { n, delta0, a: p.take("a")?.unwrap_or(0) }
        }
        "hamming_planted" => {
            let n = need_n(&p, n)?;
            let k = p.take("k")?.or(defaults.k).ok_or_else(|| Error::usage("hamming_planted: missing k"))?;
            let delta0 = p.require("delta0")?;
            let ordering = match p.take_path("order")? {
                Some(path) => io::read_values(path)?
                    .into_iter()
                    .map(|x| {
                        (x >= 0.0 && x.fract() == 0.0)
                            .then_some(x as usize)
                            .ok_or_else(|| Error::data(format!("{}: bad item {x}", path.display())))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => (0..n).collect(),
            };
            ModelSpec::HammingPlanted { n, k, delta0, ordering }
        }
        "explicit" => {
            let path =
                p.take_path("path")?.ok_or_else(|| Error::usage("explicit model needs `explicit:@matrix.csv`"))?;
            let m = io::read_matrix(path)?;
            if n.is_some_and(|n| n != m.n()) {
                return Err(Error::usage(format!(
                    "{}: matrix has n = {}, expected {}",
                    path.display(),
                    m.n(),
                    n.unwrap_or_default()
                )));
            }
            ModelSpec::Explicit(m)
        }
        other => return Err(Error::usage(format!("unknown model kind `{other}`"))),
    };
    p.finish()?;
    // Surface parameter errors now rather than at first use.
    model.build().map_err(|e| Error::from(e).context(spec))?;
    Ok(ModelTemplate { spec: model, seed_fixed })
}

pub fn parse_family(spec: &str, n: usize, k: usize) -> Result<SetFamily> {
    let mut p = Params::parse(spec)?;
    let variant = match p.kind {
        "exact" => {
            p.finish()?;
            return Ok(SetFamily::exact(n, k)?);
        }
        "hamming" => {
            let h = p.require("h")?;
            p.finish()?;
            return Ok(SetFamily::hamming(n, k, h)?);
        }
        "explicit" => {
            let path =
                p.take_path("path")?.ok_or_else(|| Error::usage("explicit family needs `explicit:@sets.csv`"))?;
            p.finish()?;
            let sets = io::read_position_sets(path)?
                .into_iter()
                .map(|s| PositionSet::new(s, n))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::from(e).context(path.display()))?;
            return Ok(SetFamily::explicit(n, k, sets)?);
        }
        "topband" => Requirement::TopBand,
        "mult" => Requirement::Multiplicative,
        "add" => Requirement::Additive,
        "ranksum" => Requirement::RankSum,
        other => return Err(Error::usage(format!("unknown family kind `{other}`"))),
    };
    let eps = p.require("eps")?;
    let rounding = match p.take::<String>("round")?.as_deref() {
        None | Some("floor") => Rounding::Floor,
        Some("ceil") => Rounding::Ceil,
        Some(other) => return Err(Error::usage(format!("`{spec}`: round must be floor or ceil, got `{other}`"))),
    };
    p.finish()?;
    Ok(SetFamily::requirement_rounded(n, k, eps, variant, rounding)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use copeland_core::setfamily::FamilyKind;

    fn defaults(n: usize) -> ModelDefaults {
        ModelDefaults { n: Some(n), k: Some(2), seed: 9 }
    }

    #[test]
    fn model_specs() {
        let t = parse_model("btl", defaults(5)).unwrap();
        assert_eq!(t.quality().unwrap().as_slice(), &[4.0, 3.0, 2.0, 1.0, 0.0]);
        let t = parse_model("btl_mixture:spread=2,lambda=0.9", defaults(3)).unwrap();
        assert!(matches!(t.spec, ModelSpec::BtlMixture { lambda, .. } if lambda == 0.9));
        let t = parse_model("sst_diagonal", defaults(4)).unwrap();
        assert!(!t.seed_fixed);
        assert!(matches!(t.spec, ModelSpec::SstDiagonal { seed: 9, .. }));
        let t = parse_model("sst_diagonal:seed=3,gap=0.1", defaults(4)).unwrap();
        assert!(t.seed_fixed);
        assert_eq!(
            parse_model("planted:delta=0.1", defaults(6)).unwrap().spec,
            ModelSpec::Planted { n: 6, k: 2, delta: 0.1 }
        );
        assert!(matches!(
            parse_model("btl_outlier", defaults(8)).unwrap().spec,
            ModelSpec::BtlOutlier { outlier: 7, .. }
        ));
    }

    #[test]
    fn model_spec_errors() {
        assert!(parse_model("nope", defaults(4)).is_err());
        assert!(parse_model("btl:colour=red", defaults(4)).is_err());
        assert!(parse_model("planted:delta=0.7", defaults(4)).is_err());
        assert!(parse_model("btl", ModelDefaults::default()).is_err());
        assert!(parse_model("btl_mixture:lambda=0.5", defaults(4)).is_err());
        assert!(parse_model("planted:delta=x", defaults(4)).is_err());
    }

    #[test]
    fn family_specs() {
        assert_eq!(parse_family("exact", 6, 2).unwrap().kind(), &FamilyKind::Exact);
        assert_eq!(parse_family("hamming:h=1", 6, 2).unwrap().kind(), &FamilyKind::Hamming { h: 1 });
        let f = parse_family("topband:eps=0.5,round=ceil", 9, 3).unwrap();
        assert_eq!(
            f.kind(),
            &FamilyKind::Requirement { variant: Requirement::TopBand, eps: 0.5, rounding: Rounding::Ceil }
        );
        for s in ["mult:eps=0.5", "add:eps=2", "ranksum:eps=0.5"] {
            assert!(parse_family(s, 8, 3).is_ok(), "{s}");
        }
        assert!(parse_family("hamming", 6, 2).is_err());
        assert!(parse_family("add:eps=-1", 6, 2).is_err());
        assert!(parse_family("topband:eps=1,round=up", 6, 2).is_err());
    }
}
