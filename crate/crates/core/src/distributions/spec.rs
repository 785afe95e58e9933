use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{IntegratedTailModel, Lattice};

/// Parses a model literal: `pareto-it:alpha=3.5`, `exp:rate=1.0` or
/// `lattice:file=PATH[,spacing=H]`.
pub fn parse_model(literal: &str) -> Result<IntegratedTailModel> {
    let (family, rest) = literal
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("model literal {literal:?} lacks a ':'")))?;
    let mut params = BTreeMap::new();
    for pair in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in {literal:?}, got {pair:?}")))?;
        if params.insert(k.trim(), v.trim()).is_some() {
            return Err(Error::Parse(format!("duplicate key {k:?} in {literal:?}")));
        }
    }
    let mut take = |key: &str| params.remove(key);
    let number = |key: &str, v: Option<&str>| -> Result<f64> {
        let v = v.ok_or_else(|| Error::Parse(format!("{family} model needs {key}=...")))?;
        v.parse()
            .map_err(|_| Error::Parse(format!("{key}={v:?} is not a number")))
    };

    let model = match family.trim() {
        "pareto-it" => IntegratedTailModel::pareto(number("alpha", take("alpha"))?)?,
        "exp" => IntegratedTailModel::exponential(number("rate", take("rate"))?)?,
        "lattice" => {
            let file = take("file")
                .ok_or_else(|| Error::Parse("lattice model needs file=PATH".into()))?;
            let spacing = match take("spacing") {
                Some(v) => Some(number("spacing", Some(v))?),
                None => None,
            };
            IntegratedTailModel::lattice(Lattice::load(Path::new(file), spacing)?)
        }
        other => return Err(Error::Parse(format!("unknown model family {other:?}"))),
    };
    if let Some(k) = params.keys().next() {
        return Err(Error::Parse(format!("unknown key {k:?} for {family} model")));
    }
    Ok(model)
}
