//! Columnar binary layout and CSV summaries.
//!
//! # Binary layout
//!
//! All integers little-endian.
//!
//! ```text
//! magic   b"SMCC"
//! version u32 (= 1)
//! kind    u8   1 = filter history, 2 = smoothing draws, 3 = mcmc chain
//! ncols   u32
//! column* name_len u16, name utf-8, dtype u8, len u64, payload
//! ```
//!
//! `dtype` is 0 for `f64`, 1 for `u32`, 2 for `u64` and 3 for utf-8 text
//! (`len` counts bytes). Filter histories store one row per particle per kept
//! step in `t`, `state`, `log_weight`, `ancestor` and `param.<name>`, plus
//! `x0`, `log_increment` and the scalars `n`, `seed`, `thinning`. When
//! sufficient statistics were kept they appear as `stat.<name>` columns and
//! are not read back. Smoothing draws store `trajectories` (row-major draws by
//! time), `param.<name>` per draw, and `t_len`, `method`, `seed`, `n`,
//! `param_draws`, `state_particles`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::filters::{FilterHistory, ParticleCloud};
use crate::mcmc::McmcChain;
use crate::model::{ParamVector, StateSpaceModel};
use crate::rng::Seed;
use crate::smoothers::{Method, Provenance, SmoothingDraws, Summary};
use crate::stats;

const MAGIC: &[u8; 4] = b"SMCC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    FilterHistory = 1,
    SmoothingDraws = 2,
    McmcChain = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    F64(Vec<f64>),
    U32(Vec<u32>),
    U64(Vec<u64>),
    Text(String),
}

/// A named set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub kind: Kind,
    pub columns: BTreeMap<String, Column>,
}

impl Columns {
    pub fn new(kind: Kind) -> Self {
        Columns { kind, columns: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, col: Column) {
        self.columns.insert(name.into(), col);
    }

    pub fn f64(&self, name: &str) -> Result<&[f64]> {
        match self.columns.get(name) {
            Some(Column::F64(v)) => Ok(v),
            _ => Err(Error::Parse(format!("missing f64 column `{name}`"))),
        }
    }

    pub fn u32(&self, name: &str) -> Result<&[u32]> {
        match self.columns.get(name) {
            Some(Column::U32(v)) => Ok(v),
            _ => Err(Error::Parse(format!("missing u32 column `{name}`"))),
        }
    }

    pub fn scalar(&self, name: &str) -> Result<u64> {
        match self.columns.get(name) {
            Some(Column::U64(v)) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::Parse(format!("missing scalar `{name}`"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.columns.get(name) {
            Some(Column::Text(s)) => Ok(s),
            _ => Err(Error::Parse(format!("missing text column `{name}`"))),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.kind as u8])?;
        w.write_all(&(self.columns.len() as u32).to_le_bytes())?;
        for (name, col) in &self.columns {
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            match col {
                Column::F64(v) => {
                    w.write_all(&[0])?;
                    w.write_all(&(v.len() as u64).to_le_bytes())?;
                    for x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                Column::U32(v) => {
                    w.write_all(&[1])?;
                    w.write_all(&(v.len() as u64).to_le_bytes())?;
                    for x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                Column::U64(v) => {
                    w.write_all(&[2])?;
                    w.write_all(&(v.len() as u64).to_le_bytes())?;
                    for x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                Column::Text(s) => {
                    w.write_all(&[3])?;
                    w.write_all(&(s.len() as u64).to_le_bytes())?;
                    w.write_all(s.as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a columnar file".into()));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported version {version}")));
        }
        let kind = match read_array::<1, _>(r)?[0] {
            1 => Kind::FilterHistory,
            2 => Kind::SmoothingDraws,
            3 => Kind::McmcChain,
            k => return Err(Error::Parse(format!("unknown kind {k}"))),
        };
        let ncols = u32::from_le_bytes(read_array(r)?);
        let mut out = Columns::new(kind);
        for _ in 0..ncols {
            let name_len = u16::from_le_bytes(read_array(r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| Error::Parse(e.to_string()))?;
            let dtype = read_array::<1, _>(r)?[0];
            let len = u64::from_le_bytes(read_array(r)?) as usize;
            let col = match dtype {
                0 => Column::F64((0..len).map(|_| read_array(r).map(f64::from_le_bytes)).collect::<Result<_>>()?),
                1 => Column::U32((0..len).map(|_| read_array(r).map(u32::from_le_bytes)).collect::<Result<_>>()?),
                2 => Column::U64((0..len).map(|_| read_array(r).map(u64::from_le_bytes)).collect::<Result<_>>()?),
                3 => {
                    let mut s = vec![0u8; len];
                    r.read_exact(&mut s)?;
                    Column::Text(String::from_utf8(s).map_err(|e| Error::Parse(e.to_string()))?)
                }
                d => return Err(Error::Parse(format!("unknown dtype {d} for `{name}`"))),
            };
            out.columns.insert(name, col);
        }
        Ok(out)
    }
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn history_to_columns<M: StateSpaceModel>(model: &M, h: &FilterHistory<M::Params, M::Stats>) -> Columns {
    let mut c = Columns::new(Kind::FilterHistory);
    let rows: usize = h.clouds.iter().map(|cl| cl.len()).sum();
    let mut t = Vec::with_capacity(rows);
    let mut state = Vec::with_capacity(rows);
    let mut lw = Vec::with_capacity(rows);
    let mut anc = Vec::with_capacity(rows);
    let mut params = vec![Vec::with_capacity(rows); M::Params::DIM];
    let mut stat_cols: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for cl in &h.clouds {
        t.extend(std::iter::repeat_n(cl.t as u32, cl.len()));
        state.extend_from_slice(&cl.states);
        lw.extend_from_slice(&cl.log_weights);
        anc.extend_from_slice(&cl.ancestors);
        for p in &cl.params {
            for (k, col) in params.iter_mut().enumerate() {
                col.push(p.get(k));
            }
        }
        if let Some(ss) = &cl.suffstats {
            for s in ss {
                for (name, v) in model.stats_values(s) {
                    stat_cols.entry(name).or_default().push(v);
                }
            }
        }
    }
    c.insert("t", Column::U32(t));
    c.insert("state", Column::F64(state));
    c.insert("log_weight", Column::F64(lw));
    c.insert("ancestor", Column::U32(anc));
    if h.fixed_params.is_none() && params.iter().all(|p| p.len() == rows) {
        for (name, col) in M::Params::names().iter().zip(params) {
            c.insert(format!("param.{name}"), Column::F64(col));
        }
    }
    if let Some(p) = h.fixed_params {
        for (k, name) in M::Params::names().iter().enumerate() {
            c.insert(format!("fixed.{name}"), Column::F64(vec![p.get(k)]));
        }
    }
    for (name, col) in stat_cols {
        c.insert(format!("stat.{name}"), Column::F64(col));
    }
    c.insert("x0", Column::F64(h.x0.clone()));
    c.insert("log_increment", Column::F64(h.log_increments.clone()));
    c.insert("n", Column::U64(vec![h.n as u64]));
    c.insert("seed", Column::U64(vec![h.seed.0]));
    c.insert("thinning", Column::U64(vec![h.thinning as u64]));
    c
}

/// Rebuilds a history; sufficient statistics are not restored.
pub fn history_from_columns<P: ParamVector, S: Copy>(c: &Columns) -> Result<FilterHistory<P, S>> {
    if c.kind != Kind::FilterHistory {
        return Err(Error::Parse("columns do not hold a filter history".into()));
    }
    let t = c.u32("t")?;
    let state = c.f64("state")?;
    let lw = c.f64("log_weight")?;
    let anc = c.u32("ancestor")?;
    if state.len() != t.len() || lw.len() != t.len() || anc.len() != t.len() {
        return Err(Error::Parse("particle columns differ in length".into()));
    }
    let param_cols: Option<Vec<&[f64]>> =
        P::names().iter().map(|n| c.f64(&format!("param.{n}")).ok()).collect();
    let fixed_params = P::names()
        .iter()
        .map(|n| c.f64(&format!("fixed.{n}")).ok().and_then(|v| v.first().copied()))
        .collect::<Option<Vec<f64>>>()
        .map(|v| P::from_values(&v));
    let mut clouds = Vec::new();
    let mut start = 0;
    while start < t.len() {
        let mut end = start;
        while end < t.len() && t[end] == t[start] {
            end += 1;
        }
        let params = match &param_cols {
            Some(cols) => (start..end)
                .map(|i| P::from_values(&cols.iter().map(|col| col[i]).collect::<Vec<_>>()))
                .collect(),
            None => Vec::new(),
        };
        clouds.push(ParticleCloud {
            t: t[start] as usize,
            states: state[start..end].to_vec(),
            params,
            suffstats: None,
            log_weights: lw[start..end].to_vec(),
            ancestors: anc[start..end].to_vec(),
        });
        start = end;
    }
    Ok(FilterHistory {
        n: c.scalar("n")? as usize,
        x0: c.f64("x0")?.to_vec(),
        clouds,
        log_increments: c.f64("log_increment")?.to_vec(),
        final_suffstats: None,
        fixed_params,
        seed: Seed(c.scalar("seed")?),
        thinning: c.scalar("thinning")? as usize,
    })
}

pub fn draws_to_columns<P: ParamVector>(d: &SmoothingDraws<P>) -> Columns {
    let mut c = Columns::new(Kind::SmoothingDraws);
    c.insert("trajectories", Column::F64(d.trajectories.clone()));
    for (k, name) in P::names().iter().enumerate() {
        c.insert(format!("param.{name}"), Column::F64(d.params.iter().map(|p| p.get(k)).collect()));
    }
    c.insert("t_len", Column::U64(vec![d.t_len as u64]));
    c.insert("method", Column::Text(d.method.tag().into()));
    c.insert("seed", Column::U64(vec![d.provenance.seed]));
    c.insert("n", Column::U64(vec![d.provenance.n as u64]));
    c.insert("param_draws", Column::U64(vec![d.provenance.param_draws as u64]));
    c.insert("state_particles", Column::U64(vec![d.provenance.state_particles as u64]));
    c
}

pub fn draws_from_columns<P: ParamVector>(c: &Columns) -> Result<SmoothingDraws<P>> {
    let t_len = c.scalar("t_len")? as usize;
    let traj = c.f64("trajectories")?;
    let cols = P::names().iter().map(|n| c.f64(&format!("param.{n}"))).collect::<Result<Vec<_>>>()?;
    let m = cols.first().map_or(traj.len() / t_len.max(1), |c| c.len());
    if traj.len() != m * t_len {
        return Err(Error::Parse(format!("{} trajectory values for {m} draws of length {t_len}", traj.len())));
    }
    let method = Method::from_tag(c.text("method")?)
        .ok_or_else(|| Error::Parse(format!("unknown method `{}`", c.text("method").unwrap_or_default())))?;
    Ok(SmoothingDraws {
        t_len,
        trajectories: traj.to_vec(),
        params: (0..m).map(|i| P::from_values(&cols.iter().map(|col| col[i]).collect::<Vec<_>>())).collect(),
        method,
        provenance: Provenance {
            seed: c.scalar("seed")?,
            n: c.scalar("n")? as usize,
            param_draws: c.scalar("param_draws")? as usize,
            state_particles: c.scalar("state_particles")? as usize,
        },
    })
}

pub const SUMMARY_HEADER: &str = "quantity,t,mean,sd,q025,q500,q975";

fn write_summary_row<W: Write>(w: &mut W, quantity: &str, t: usize, s: &Summary) -> Result<()> {
    writeln!(w, "{quantity},{t},{},{},{},{},{}", s.mean, s.sd, s.q025, s.q500, s.q975)?;
    Ok(())
}

fn weighted_summary(x: &[f64], w: &[f64]) -> Summary {
    let (mean, var) = stats::weighted_mean_var(x, w);
    Summary {
        mean,
        sd: var.sqrt(),
        q025: stats::weighted_quantile(x, w, 0.025),
        q500: stats::weighted_quantile(x, w, 0.5),
        q975: stats::weighted_quantile(x, w, 0.975),
    }
}

/// Per-step weighted summaries of the filtering distribution: one `x` row
/// per step and, under parameter learning, one row per parameter.
pub fn write_history_summary<P: ParamVector, S: Copy, W: Write>(h: &FilterHistory<P, S>, w: &mut W) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for cl in &h.clouds {
        let wt = cl.weights();
        write_summary_row(w, "x", cl.t, &weighted_summary(&cl.states, &wt))?;
        if !cl.params.is_empty() {
            for (k, name) in P::names().iter().enumerate() {
                let v: Vec<f64> = cl.params.iter().map(|p| p.get(k)).collect();
                write_summary_row(w, name, cl.t, &weighted_summary(&v, &wt))?;
            }
        }
    }
    Ok(())
}

/// Per-time state summaries, then one row per parameter at `t = T`.
pub fn write_draws_summary<P: ParamVector, W: Write>(d: &SmoothingDraws<P>, w: &mut W) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (k, s) in d.state_summary().iter().enumerate() {
        write_summary_row(w, "x", k + 1, s)?;
    }
    for (name, s) in d.param_summary() {
        write_summary_row(w, name, d.t_len, &s)?;
    }
    Ok(())
}

/// All draws, one row per draw: `draw,x1..xT,<params>`.
pub fn write_draws_full<P: ParamVector, W: Write>(d: &SmoothingDraws<P>, w: &mut W) -> Result<()> {
    let mut header = vec!["draw".to_string()];
    header.extend((1..=d.t_len).map(|t| format!("x{t}")));
    header.extend(P::names().iter().map(|s| s.to_string()));
    writeln!(w, "{}", header.join(","))?;
    for i in 0..d.len() {
        let mut row = vec![i.to_string()];
        row.extend(d.trajectory(i).iter().map(|x| x.to_string()));
        row.extend(d.params[i].values().iter().map(|x| x.to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parameter trace: `iteration,<params>`.
pub fn write_trace<P: ParamVector, W: Write>(chain: &McmcChain<P>, w: &mut W) -> Result<()> {
    writeln!(w, "iteration,{}", P::names().join(","))?;
    for (k, p) in chain.draws.params.iter().enumerate() {
        let vals: Vec<String> = p.values().iter().map(|x| x.to_string()).collect();
        writeln!(w, "{},{}", chain.iteration_of(k), vals.join(","))?;
    }
    Ok(())
}
