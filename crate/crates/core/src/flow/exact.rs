use serde::{Deserialize, Serialize};

/// A dyadic rational `numer / 2^shift`. Every finite `f64` is one, which is
/// what lets atomic (and most sampled) capacity fields be solved exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub numer: i128,
    pub shift: u32,
}

impl Dyadic {
    pub fn new(numer: i128, shift: u32) -> Self {
        Self { numer, shift }.reduced()
    }

    fn reduced(mut self) -> Self {
        if self.numer == 0 {
            self.shift = 0;
        }
        while self.shift > 0 && self.numer % 2 == 0 {
            self.numer /= 2;
            self.shift -= 1;
        }
        self
    }

    pub fn to_f64(self) -> f64 {
        self.numer as f64 / 2f64.powi(self.shift as i32)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let s = self.shift.max(other.shift);
        match (
            lift(self.numer, s - self.shift),
            lift(other.numer, s - other.shift),
        ) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

fn lift(numer: i128, by: u32) -> Option<i128> {
    let bits = 128 - numer.unsigned_abs().leading_zeros();
    (bits + by < 127).then(|| numer << by)
}

/// Sums of scaled capacities stay below this, far under `i128::MAX / 4`
/// which the solver uses for unbounded arcs.
const SUM_LIMIT: i128 = 1 << 120;

/// Capacities as integers over a common power of two, if they fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledCapacities {
    pub scaled: Vec<i128>,
    pub shift: u32,
}

impl ScaledCapacities {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let parts: Vec<(u64, i32)> = values
            .iter()
            .map(|&v| decompose(v))
            .collect::<Option<Vec<_>>>()?;
        let shift = parts
            .iter()
            .filter(|(m, _)| *m != 0)
            .map(|&(_, e)| (-e).max(0))
            .max()
            .unwrap_or(0);
        let mut total: i128 = 0;
        let mut scaled = Vec::with_capacity(values.len());
        for (m, e) in parts {
            let bits = e + shift;
            if m != 0 && (64 - m.leading_zeros()) as i32 + bits > 120 {
                return None;
            }
            let s = if m == 0 { 0 } else { (m as i128) << bits };
            total = total.checked_add(s)?;
            if total >= SUM_LIMIT {
                return None;
            }
            scaled.push(s);
        }
        Some(Self {
            scaled,
            shift: shift as u32,
        })
    }

    pub fn dyadic(&self, numer: i128) -> Dyadic {
        Dyadic::new(numer, self.shift)
    }
}

/// `v = m * 2^e` with odd `m` (or `m = 0`). `None` for negative or non-finite values.
fn decompose(v: f64) -> Option<(u64, i32)> {
    if !v.is_finite() || v < 0.0 {
        return None;
    }
    if v == 0.0 {
        return Some((0, 0));
    }
    let bits = v.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += tz as i32;
    Some((m, e))
}
