//! Declarative study descriptions: `key = value` lines with `#` comments,
//! plus named presets.
//!
//! Scenario keys: `name`, `d`, `k`, `n` (one value or one per group), `rho`,
//! `mu` (comma list) or `mu_seed`, `targets` (one value broadcast to `k`
//! groups, or one per group), `distribution`, `variant` (`rr`, `vv`, `vn`,
//! `az`, a comma list, or `all`), `target` (`c`, `b` or `both`), `alpha`,
//! `replicates`, `resamples`, `mc_draws`, `seed`, `tests`, `contrasts`,
//! `mct_contrasts`, `layout`.
//!
//! With `mode = mimic`, groups are given as `group.<label>.mu`,
//! `group.<label>.sigma` (rows separated by `;`) and `group.<label>.n`;
//! `d`, `k`, `n`, `rho`, `mu`, `mu_seed` and `targets` are not accepted.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GroupMoments, Innovation, MimicConfig, RunSettings, ScenarioConfig, TestId};
use crate::design::{ContrastSpec, FactorLayout};
use crate::error::{McvError, Result};
use crate::estimation::McvVariant;
use crate::numkit::{Matrix, RngStream};
use crate::tests_global::TargetKind;

/// Seed of the `N(0, 1)` draw that fixes the shared mean vector in presets.
pub const PRESET_MU_SEED: u64 = 20_230_915;

pub const PRESETS: [&str; 4] = ["paper-size-small", "power", "nightly", "full-grid"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Study {
    Scenario(ScenarioConfig),
    Mimic(MimicConfig),
}

impl Study {
    pub fn name(&self) -> &str {
        match self {
            Study::Scenario(c) => &c.name,
            Study::Mimic(c) => &c.name,
        }
    }

    pub fn settings(&self) -> &RunSettings {
        match self {
            Study::Scenario(c) => &c.settings,
            Study::Mimic(c) => &c.settings,
        }
    }

    pub fn settings_mut(&mut self) -> &mut RunSettings {
        match self {
            Study::Scenario(c) => &mut c.settings,
            Study::Mimic(c) => &mut c.settings,
        }
    }
}

/// `d` independent `N(0, 1)` draws from stream `(seed, 0)`.
pub fn draw_mu(d: usize, seed: u64) -> Vec<f64> {
    let mut g = RngStream::new(seed, 0).generator();
    (0..d).map(|_| StandardNormal.sample(&mut g)).collect()
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> McvError {
    McvError::Config(format!("line {line}: {msg}"))
}

fn parse_list<V: std::str::FromStr>(s: &str) -> Option<Vec<V>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn parse_variants(s: &str) -> Result<Vec<McvVariant>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(McvVariant::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}

fn parse_kinds(s: &str) -> Result<Vec<TargetKind>> {
    if s.trim().eq_ignore_ascii_case("both") {
        return Ok(TargetKind::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}

fn parse_sigma(s: &str) -> Option<Matrix<f64>> {
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<Option<_>>()?;
    Matrix::from_rows(&rows).ok()
}

#[derive(Default)]
struct MimicGroup {
    mu: Option<Vec<f64>>,
    sigma: Option<Matrix<f64>>,
    n: Option<usize>,
}

/// Parses a study file; `variant` and `target` lists expand to one study per
/// combination, named `<name>-<VARIANT>-<TARGET>`.
pub fn parse_config(text: &str) -> Result<Vec<Study>> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut groups: Vec<(String, MimicGroup)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| cfg_err(line_no, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim().to_string();
        if let Some(rest) = key.strip_prefix("group.") {
            let (label, field) =
                rest.rsplit_once('.').ok_or_else(|| cfg_err(line_no, "expected `group.<label>.<field>`"))?;
            let idx = match groups.iter().position(|(l, _)| l == label) {
                Some(i) => i,
                None => {
                    groups.push((label.to_string(), MimicGroup::default()));
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx].1;
            let bad = || cfg_err(line_no, format!("cannot parse `{value}` for {key}"));
            match field {
                "mu" => g.mu = Some(parse_list(&value).ok_or_else(bad)?),
                "sigma" => g.sigma = Some(parse_sigma(&value).ok_or_else(bad)?),
                "n" => g.n = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(cfg_err(line_no, format!("unknown group field `{field}`"))),
            }
            continue;
        }
        let key = key.to_ascii_lowercase();
        if kv.insert(key.clone(), (line_no, value)).is_some() {
            return Err(cfg_err(line_no, format!("duplicate key `{key}`")));
        }
    }

    let take = |kv: &mut BTreeMap<String, (usize, String)>, key: &str| kv.remove(key);
    fn parsed<V: std::str::FromStr>(entry: Option<(usize, String)>, key: &str) -> Result<Option<V>> {
        entry
            .map(|(line, v)| v.parse::<V>().map_err(|_| cfg_err(line, format!("cannot parse `{v}` for {key}"))))
            .transpose()
    }

    let mode = take(&mut kv, "mode").map(|(_, v)| v.to_ascii_lowercase()).unwrap_or_else(|| "scenario".into());
    let name = take(&mut kv, "name").map(|(_, v)| v).unwrap_or_else(|| "study".into());
    let mut base = RunSettings::default();
    if let Some(v) = parsed::<Innovation>(take(&mut kv, "distribution"), "distribution")? {
        base.distribution = v;
    }
    if let Some(v) = parsed(take(&mut kv, "alpha"), "alpha")? {
        base.alpha = v;
    }
    if let Some(v) = parsed(take(&mut kv, "replicates"), "replicates")? {
        base.replicates = v;
    }
    if let Some(v) = parsed(take(&mut kv, "resamples"), "resamples")? {
        base.resamples = v;
    }
    if let Some(v) = parsed(take(&mut kv, "mc_draws"), "mc_draws")? {
        base.mc_draws = v;
    }
    if let Some(v) = parsed(take(&mut kv, "seed"), "seed")? {
        base.seed = v;
    }
    if let Some((line, v)) = take(&mut kv, "tests") {
        base.tests = v.split(',').map(|t| t.parse()).collect::<Result<_>>().map_err(|e| cfg_err(line, e))?;
    }
    if let Some(v) = parsed::<ContrastSpec>(take(&mut kv, "contrasts"), "contrasts")? {
        base.contrasts = v;
    }
    if let Some(v) = parsed::<ContrastSpec>(take(&mut kv, "mct_contrasts"), "mct_contrasts")? {
        base.mct_contrasts = v;
    }
    base.layout = parsed::<FactorLayout>(take(&mut kv, "layout"), "layout")?;
    let variants = match take(&mut kv, "variant") {
        Some((line, v)) => parse_variants(&v).map_err(|e| cfg_err(line, e))?,
        None => vec![McvVariant::Vv],
    };
    let kinds = match take(&mut kv, "target") {
        Some((line, v)) => parse_kinds(&v).map_err(|e| cfg_err(line, e))?,
        None => vec![TargetKind::C],
    };

    let shape: Box<dyn Fn(RunSettings, String) -> Study> = match mode.as_str() {
        "scenario" => {
            let d: usize = parsed(take(&mut kv, "d"), "d")?.unwrap_or(5);
            let rho: f64 = parsed(take(&mut kv, "rho"), "rho")?.unwrap_or(0.1);
            let targets: Vec<f64> = match take(&mut kv, "targets") {
                Some((line, v)) => {
                    parse_list(&v).ok_or_else(|| cfg_err(line, format!("cannot parse targets `{v}`")))?
                }
                None => vec![0.5],
            };
            let k: usize =
                parsed(take(&mut kv, "k"), "k")?.unwrap_or(if targets.len() > 1 { targets.len() } else { 4 });
            let targets = broadcast(targets, k, "targets")?;
            let n: Vec<usize> = match take(&mut kv, "n") {
                Some((line, v)) => parse_list(&v).ok_or_else(|| cfg_err(line, format!("cannot parse n `{v}`")))?,
                None => vec![30],
            };
            let n = broadcast(n, k, "n")?;
            let mu_seed: u64 = parsed(take(&mut kv, "mu_seed"), "mu_seed")?.unwrap_or(PRESET_MU_SEED);
            let mu: Vec<f64> = match take(&mut kv, "mu") {
                Some((line, v)) => parse_list(&v).ok_or_else(|| cfg_err(line, format!("cannot parse mu `{v}`")))?,
                None => draw_mu(d, mu_seed),
            };
            Box::new(move |settings, name| {
                Study::Scenario(ScenarioConfig {
                    name,
                    d,
                    n: n.clone(),
                    rho,
                    mu: mu.clone(),
                    targets: targets.clone(),
                    settings,
                })
            })
        }
        "mimic" => {
            if groups.is_empty() {
                return Err(McvError::Config("mimic mode needs `group.<label>.*` entries".into()));
            }
            let groups = groups
                .into_iter()
                .map(|(label, g)| {
                    let missing = |f: &str| McvError::Config(format!("group `{label}` lacks `{f}`"));
                    Ok(GroupMoments {
                        mu: g.mu.ok_or_else(|| missing("mu"))?,
                        sigma: g.sigma.ok_or_else(|| missing("sigma"))?,
                        n: g.n.ok_or_else(|| missing("n"))?,
                        label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Box::new(move |settings, name| Study::Mimic(MimicConfig { name, groups: groups.clone(), settings }))
        }
        other => return Err(McvError::Config(format!("unknown mode `{other}`"))),
    };
    if let Some((key, (line, _))) = kv.into_iter().next() {
        return Err(cfg_err(line, format!("unknown or inapplicable key `{key}`")));
    }

    let mut out = Vec::with_capacity(variants.len() * kinds.len());
    for &variant in &variants {
        for &kind in &kinds {
            let settings = RunSettings { variant, target_kind: kind, ..base.clone() };
            settings.validate()?;
            out.push(shape(settings, format!("{name}-{variant}-{kind}")));
        }
    }
    for s in &out {
        if let Study::Scenario(c) = s {
            c.validate()?;
        }
    }
    Ok(out)
}

fn broadcast<V: Clone>(v: Vec<V>, k: usize, what: &str) -> Result<Vec<V>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); k]),
        len if len == k => Ok(v),
        len => Err(McvError::Config(format!("{what} has {len} entries for {k} groups"))),
    }
}

fn preset_scenario(name: String, n: usize, targets: Vec<f64>, rho: f64, settings: RunSettings) -> Study {
    Study::Scenario(ScenarioConfig {
        name,
        d: 5,
        n: vec![n; 4],
        rho,
        mu: draw_mu(5, PRESET_MU_SEED),
        targets,
        settings,
    })
}

fn expand(name: &str, n: usize, targets: &[f64], rho: f64, variants: &[McvVariant], base: &RunSettings) -> Vec<Study> {
    let mut out = Vec::new();
    for &variant in variants {
        for kind in TargetKind::ALL {
            let settings = RunSettings { variant, target_kind: kind, ..base.clone() };
            out.push(preset_scenario(format!("{name}-{variant}-{kind}"), n, targets.to_vec(), rho, settings));
        }
    }
    out
}

/// Named study collections.
///
/// * `paper-size-small`: the null layout `C = 0.5` in four 5-dimensional
///   groups of 30, `ρ = 0.1`, normal data, VV, both targets, the three
///   resampling tests, 1000 replicates × 500 resamples.
/// * `power`: the same with `C = (0.5, 0.5, 0.5, 0.7)` and groups of 50.
/// * `nightly`: the null layout for all four variants and all five tests.
/// * `full-grid`: 216 null scenarios (ρ ∈ {0.1, 0.4, 0.7}, three laws,
///   `n_i` ∈ {30, 50, 70, 100, 150, 200}, `C` ∈ {0.1, 0.5, 1, 1.5}) and 54
///   alternatives (`n_i` ∈ {30, 50}, three layouts), each for all variants,
///   both targets and all tests, at 1000 replicates × 1000 resamples.
pub fn preset(name: &str) -> Result<Vec<Study>> {
    let resampling = vec![TestId::WaldPermutation, TestId::WaldBootstrap, TestId::MctBootstrap];
    let small = RunSettings { tests: resampling, ..RunSettings::default() };
    match name {
        "paper-size-small" => Ok(expand("paper-size-small", 30, &[0.5; 4], 0.1, &[McvVariant::Vv], &small)),
        "power" => Ok(expand("power", 50, &[0.5, 0.5, 0.5, 0.7], 0.1, &[McvVariant::Vv], &small)),
        "nightly" => {
            let s = RunSettings { tests: TestId::ALL.to_vec(), ..small };
            Ok(expand("nightly", 30, &[0.5; 4], 0.1, &McvVariant::ALL, &s))
        }
        "full-grid" => {
            let full = RunSettings { tests: TestId::ALL.to_vec(), resamples: 1000, ..small };
            let mut out = Vec::new();
            for rho in [0.1, 0.4, 0.7] {
                for dist in Innovation::ALL {
                    let s = RunSettings { distribution: dist, ..full.clone() };
                    for n in [30, 50, 70, 100, 150, 200] {
                        for c in [0.1, 0.5, 1.0, 1.5] {
                            out.extend(expand(
                                &format!("h0-rho{rho}-{dist}-n{n}-c{c}"),
                                n,
                                &[c; 4],
                                rho,
                                &McvVariant::ALL,
                                &s,
                            ));
                        }
                    }
                    for n in [30, 50] {
                        for (j, (c, c4)) in [(0.1, 0.15), (0.5, 0.7), (1.0, 1.5)].into_iter().enumerate() {
                            let name = format!("h1-{}-rho{rho}-{dist}-n{n}", j + 1);
                            out.extend(expand(&name, n, &[c, c, c, c4], rho, &McvVariant::ALL, &s));
                        }
                    }
                }
            }
            Ok(out)
        }
        other => Err(McvError::Config(format!("unknown preset `{other}` (available: {})", PRESETS.join(", ")))),
    }
}
