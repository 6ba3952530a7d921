use std::io::{BufRead, Write};

use rand::Rng;

use super::PolicyError;
use crate::bernoulli::BetaCounts;
use crate::TIE_TOLERANCE;

/// First line of a serialized table or index.
pub const TABLE_FORMAT_HEADER: &str = "# metalevel one-armed table v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneArmedAction {
    Stop,
    Sample,
}

/// Largest number of samples an optimal one-armed policy can take:
/// `max(0, ceil(lambda (1 - lambda) / c - 3))`.
///
/// From that many samples on, one more sample can never gain more than its
/// cost, and the set of such states is closed under sampling.
pub fn n_max(lambda: f64, cost: f64) -> u32 {
    let bound = lambda * (1.0 - lambda) / cost - 3.0;
    // absorb rounding in the quotient; at exact equality stopping is optimal anyway
    (bound - 1e-9).ceil().max(0.0) as u32
}

/// Optimal values and actions of the one-armed problem: a known arm worth
/// `lambda` against a Bernoulli arm with uniform prior, sampling at `cost`.
///
/// Entries cover every `(s, f)` with `s + f <= n_max`, stored by diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct OneArmedTable {
    lambda: f64,
    cost: f64,
    n_max: u32,
    value: Vec<f64>,
    act: Vec<OneArmedAction>,
}

fn slot(s: u64, f: u64) -> usize {
    let n = (s + f) as usize;
    n * (n + 1) / 2 + s as usize
}

/// Backward induction from the `n_max` diagonal.
pub fn solve_one_armed(lambda: f64, cost: f64) -> Result<OneArmedTable, PolicyError> {
    if !(cost > 0.0 && cost.is_finite()) {
        return Err(PolicyError::InvalidCost(cost));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(PolicyError::InvalidLambda(lambda));
    }
    let top = n_max(lambda, cost);
    let len = slot(0, top as u64 + 1);
    let mut value = vec![0.0; len];
    let mut act = vec![OneArmedAction::Stop; len];
    for s in 0..=top as u64 {
        let f = top as u64 - s;
        value[slot(s, f)] = lambda.max(BetaCounts::new(s, f).posterior_mean());
    }
    for n in (0..top as u64).rev() {
        for s in 0..=n {
            let f = n - s;
            let counts = BetaCounts::new(s, f);
            let stop = lambda.max(counts.posterior_mean());
            let p = counts.predictive_success();
            let sample = p * value[slot(s + 1, f)] + (1.0 - p) * value[slot(s, f + 1)] - cost;
            let i = slot(s, f);
            if sample > stop + TIE_TOLERANCE {
                value[i] = sample;
                act[i] = OneArmedAction::Sample;
            } else {
                value[i] = stop;
            }
        }
    }
    Ok(OneArmedTable { lambda, cost, n_max: top, value, act })
}

impl OneArmedTable {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn stop_value(&self, s: u64, f: u64) -> f64 {
        self.lambda.max(BetaCounts::new(s, f).posterior_mean())
    }

    /// Optimal value; past the table every state stops.
    pub fn value(&self, s: u64, f: u64) -> f64 {
        if s + f <= self.n_max as u64 {
            self.value[slot(s, f)]
        } else {
            self.stop_value(s, f)
        }
    }

    pub fn action(&self, s: u64, f: u64) -> OneArmedAction {
        if s + f <= self.n_max as u64 {
            self.act[slot(s, f)]
        } else {
            OneArmedAction::Stop
        }
    }

    /// Value of sampling once more from `(s, f)` and acting optimally after.
    pub fn sample_q(&self, s: u64, f: u64) -> f64 {
        let p = BetaCounts::new(s, f).predictive_success();
        p * self.value(s + 1, f) + (1.0 - p) * self.value(s, f + 1) - self.cost
    }

    /// Simulates the optimal policy against a rate drawn uniformly at random;
    /// returns the number of samples taken.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let theta: f64 = rng.random();
        let (mut s, mut f) = (0u64, 0u64);
        while self.action(s, f) == OneArmedAction::Sample {
            if rng.random::<f64>() < theta {
                s += 1;
            } else {
                f += 1;
            }
        }
        s + f
    }

    /// Writes the table as CSV under [`TABLE_FORMAT_HEADER`].
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{TABLE_FORMAT_HEADER}")?;
        self.write_body(out)
    }

    pub(crate) fn write_body<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "lambda,cost,n_max")?;
        writeln!(out, "{},{},{}", self.lambda, self.cost, self.n_max)?;
        writeln!(out, "s,f,value,act")?;
        for n in 0..=self.n_max as u64 {
            for s in 0..=n {
                let f = n - s;
                let a = match self.act[slot(s, f)] {
                    OneArmedAction::Stop => "stop",
                    OneArmedAction::Sample => "sample",
                };
                writeln!(out, "{s},{f},{},{a}", self.value[slot(s, f)])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<OneArmedTable, PolicyError> {
        let mut lines = Lines::new(input);
        lines.expect(TABLE_FORMAT_HEADER)?;
        Self::read_body(&mut lines)
    }

    pub(crate) fn read_body<R: BufRead>(lines: &mut Lines<R>) -> Result<OneArmedTable, PolicyError> {
        lines.expect("lambda,cost,n_max")?;
        let (line, meta) = lines.next_line()?;
        let fields: Vec<&str> = meta.split(',').collect();
        if fields.len() != 3 {
            return Err(PolicyError::Format { line, reason: "expected lambda,cost,n_max".into() });
        }
        let lambda: f64 = parse(line, fields[0])?;
        let cost: f64 = parse(line, fields[1])?;
        let top: u32 = parse(line, fields[2])?;
        lines.expect("s,f,value,act")?;
        let len = slot(0, top as u64 + 1);
        let mut value = vec![0.0; len];
        let mut act = vec![OneArmedAction::Stop; len];
        for i in 0..len {
            let (line, row) = lines.next_line()?;
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != 4 {
                return Err(PolicyError::Format { line, reason: "expected s,f,value,act".into() });
            }
            let s: u64 = parse(line, fields[0])?;
            let f: u64 = parse(line, fields[1])?;
            if s + f > top as u64 || slot(s, f) != i {
                return Err(PolicyError::Format { line, reason: format!("unexpected cell ({s}, {f})") });
            }
            value[i] = parse(line, fields[2])?;
            act[i] = match fields[3] {
                "stop" => OneArmedAction::Stop,
                "sample" => OneArmedAction::Sample,
                other => return Err(PolicyError::Format { line, reason: format!("unknown action {other}") }),
            };
        }
        Ok(OneArmedTable { lambda, cost, n_max: top, value, act })
    }
}

fn parse<T: std::str::FromStr>(line: usize, field: &str) -> Result<T, PolicyError> {
    field
        .trim()
        .parse()
        .map_err(|_| PolicyError::Format { line, reason: format!("cannot parse {field:?}") })
}

pub(crate) struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    pub(crate) fn new(input: R) -> Self {
        Lines { inner: input.lines(), line: 0 }
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, String), PolicyError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok((self.line, l?)),
            None => Err(PolicyError::Format { line: self.line, reason: "unexpected end of input".into() }),
        }
    }

    pub(crate) fn expect(&mut self, want: &str) -> Result<(), PolicyError> {
        let (line, got) = self.next_line()?;
        if got.trim() != want {
            return Err(PolicyError::Format { line, reason: format!("expected {want:?}, found {got:?}") });
        }
        Ok(())
    }
}
