use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::one_armed::Lines;
use super::{pick, solve_one_armed, MetaAction, MetaPolicy, OneArmedTable, PolicyError, TABLE_FORMAT_HEADER};
use crate::bernoulli::FlatState;

/// Grid size used by default for the blinkered index.
pub const DEFAULT_GRID_POINTS: usize = 129;

/// One-armed tables on an equally spaced grid of known-arm values in [0, 1].
///
/// The blinkered value of sampling arm `i` is the one-armed sampling value at
/// `lambda = max_{j != i} mu_j`, interpolated linearly between the two
/// bracketing grid tables. With a single arm `lambda` is taken as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BlinkeredIndex {
    cost: f64,
    tables: Vec<OneArmedTable>,
}

impl BlinkeredIndex {
    /// Solves `points` one-armed problems; total work is O(points / cost^2).
    pub fn build(cost: f64, points: usize) -> Result<BlinkeredIndex, PolicyError> {
        if points < 2 {
            return Err(PolicyError::GridTooSmall(points));
        }
        let tables = (0..points)
            .into_par_iter()
            .map(|j| solve_one_armed(grid_point(j, points), cost))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BlinkeredIndex { cost, tables })
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn points(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[OneArmedTable] {
        &self.tables
    }

    /// Interpolated blinkered value of sampling `arm` in `state`.
    pub fn q(&self, state: &FlatState, arm: usize) -> f64 {
        let lambda = state.best_other_mean(arm);
        let counts = state.arm(arm);
        let d = self.tables.len();
        let x = lambda.clamp(0.0, 1.0) * (d - 1) as f64;
        let j = (x.floor() as usize).min(d - 2);
        let w = x - j as f64;
        let lo = self.tables[j].sample_q(counts.successes, counts.failures);
        if w == 0.0 {
            return lo;
        }
        let hi = self.tables[j + 1].sample_q(counts.successes, counts.failures);
        (1.0 - w) * lo + w * hi
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# metalevel blinkered index v1")?;
        writeln!(out, "cost,points")?;
        writeln!(out, "{},{}", self.cost, self.tables.len())?;
        for t in &self.tables {
            writeln!(out, "{TABLE_FORMAT_HEADER}")?;
            t.write_body(out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<BlinkeredIndex, PolicyError> {
        let mut lines = Lines::new(input);
        lines.expect("# metalevel blinkered index v1")?;
        lines.expect("cost,points")?;
        let (line, meta) = lines.next_line()?;
        let bad = |reason: &str| PolicyError::Format { line, reason: reason.into() };
        let (cost, points) = meta.split_once(',').ok_or_else(|| bad("expected cost,points"))?;
        let cost: f64 = cost.trim().parse().map_err(|_| bad("bad cost"))?;
        let points: usize = points.trim().parse().map_err(|_| bad("bad point count"))?;
        if points < 2 {
            return Err(PolicyError::GridTooSmall(points));
        }
        let mut tables = Vec::with_capacity(points);
        for _ in 0..points {
            lines.expect(TABLE_FORMAT_HEADER)?;
            tables.push(OneArmedTable::read_body(&mut lines)?);
        }
        Ok(BlinkeredIndex { cost, tables })
    }
}

pub(crate) fn grid_point(j: usize, points: usize) -> f64 {
    j as f64 / (points - 1) as f64
}

impl MetaPolicy for BlinkeredIndex {
    fn decide(&self, state: &FlatState) -> MetaAction {
        pick(state.best_mean(), (0..state.k()).map(|i| self.q(state, i)))
    }
}

/// Blinkered policy with one-armed problems solved at the exact
/// `lambda = max_{j != i} mu_j`, no grid. Tables are cached per lambda.
#[derive(Debug)]
pub struct ExactBlinkered {
    cost: f64,
    cache: Mutex<HashMap<u64, Arc<OneArmedTable>>>,
}

impl ExactBlinkered {
    pub fn new(cost: f64) -> Result<ExactBlinkered, PolicyError> {
        if !(cost > 0.0 && cost.is_finite()) {
            return Err(PolicyError::InvalidCost(cost));
        }
        Ok(ExactBlinkered { cost, cache: Mutex::new(HashMap::new()) })
    }

    pub fn table(&self, lambda: f64) -> Arc<OneArmedTable> {
        let key = lambda.to_bits();
        if let Some(t) = self.cache.lock().expect("cache lock").get(&key) {
            return Arc::clone(t);
        }
        let t = Arc::new(solve_one_armed(lambda, self.cost).expect("cost validated, lambda is a mean"));
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&t));
        t
    }

    pub fn q(&self, state: &FlatState, arm: usize) -> f64 {
        let counts = state.arm(arm);
        self.table(state.best_other_mean(arm)).sample_q(counts.successes, counts.failures)
    }
}

impl MetaPolicy for ExactBlinkered {
    fn decide(&self, state: &FlatState) -> MetaAction {
        pick(state.best_mean(), (0..state.k()).map(|i| self.q(state, i)))
    }
}
