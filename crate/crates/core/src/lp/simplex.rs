use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};

use super::{LpOutcome, LpProblem, Sign};
use crate::Rational;

type SparseRow = BTreeMap<usize, Rational>;

/// Consecutive degenerate pivots tolerated under largest-coefficient
/// pricing before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

struct Eliminated {
    var: usize,
    row: SparseRow,
    rhs: Rational,
}

pub(super) fn run(p: &LpProblem, optimize: bool) -> LpOutcome {
    let n = p.num_vars();
    let mut rows: Vec<Option<(SparseRow, Rational)>> = p
        .equalities
        .iter()
        .map(|e| {
            let row: SparseRow = e.coeffs.iter().map(|(v, c)| (v.0 as usize, c.clone())).collect();
            (row, -e.constant.clone())
        })
        .map(Some)
        .collect();
    let mut obj: SparseRow = if optimize {
        p.objective
            .coeffs
            .iter()
            .map(|(v, c)| (v.0 as usize, c.clone()))
            .collect()
    } else {
        SparseRow::new()
    };

    let eliminated = eliminate_free(p, &mut rows, &mut obj);

    let free_unbounded = obj
        .iter()
        .any(|(v, c)| p.signs[*v] == Sign::Free && !c.is_zero());

    let mut active = Vec::new();
    for (row, rhs) in rows.into_iter().flatten() {
        if row.is_empty() {
            if !rhs.is_zero() {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        active.push((row, rhs));
    }

    let nonneg: Vec<usize> = (0..n).filter(|&v| p.signs[v] == Sign::NonNeg).collect();
    let col_of: HashMap<usize, usize> = nonneg.iter().enumerate().map(|(c, &v)| (v, c)).collect();
    let cost: Vec<Rational> = nonneg
        .iter()
        .map(|v| obj.get(v).cloned().unwrap_or_default())
        .collect();

    let mut t = match Tableau::phase_one(&active, &col_of, nonneg.len()) {
        Some(t) => t,
        None => return LpOutcome::Infeasible,
    };

    if optimize {
        t.set_objective(&cost);
        if t.iterate().is_err() {
            return LpOutcome::Unbounded;
        }
        if free_unbounded {
            return LpOutcome::Unbounded;
        }
    }

    let mut values = vec![Rational::zero(); n];
    for (i, &c) in t.basis.iter().enumerate() {
        values[nonneg[c]] = t.rows[i][t.width - 1].clone();
    }
    for e in eliminated.iter().rev() {
        let mut v = e.rhs.clone();
        for (j, a) in &e.row {
            if *j != e.var {
                v -= a * &values[*j];
            }
        }
        values[e.var] = v;
    }
    let value = p.objective_at(&values);
    LpOutcome::Optimal { values, value }
}

/// Gauss-Jordan elimination of free variables, choosing at each step the
/// pivot with the smallest fill-in estimate.
fn eliminate_free(
    p: &LpProblem,
    rows: &mut [Option<(SparseRow, Rational)>],
    obj: &mut SparseRow,
) -> Vec<Eliminated> {
    let mut out = Vec::new();
    loop {
        let mut cols: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            if let Some((row, _)) = r {
                for v in row.keys() {
                    if p.signs[*v] == Sign::Free {
                        cols.entry(*v).or_default().push(i);
                    }
                }
            }
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for (v, rs) in &cols {
            let (ri, len) = rs
                .iter()
                .map(|&i| (i, rows[i].as_ref().unwrap().0.len()))
                .min_by_key(|&(i, len)| (len, i))
                .unwrap();
            let score = (len - 1) * (rs.len() - 1);
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, *v, ri));
            }
        }
        let Some((_, v, ri)) = best else {
            return out;
        };
        let (mut row, mut rhs) = rows[ri].take().unwrap();
        let a = row[&v].clone();
        for c in row.values_mut() {
            *c /= &a;
        }
        rhs /= &a;
        for i in &cols[&v] {
            if *i == ri {
                continue;
            }
            let (other, orhs) = rows[*i].as_mut().unwrap();
            let f = other[&v].clone();
            axpy(other, &row, &f);
            *orhs -= &f * &rhs;
        }
        if let Some(f) = obj.get(&v).cloned() {
            axpy(obj, &row, &f);
        }
        out.push(Eliminated { var: v, row, rhs });
    }
}

/// `dst -= f * src`, dropping cancelled entries.
fn axpy(dst: &mut SparseRow, src: &SparseRow, f: &Rational) {
    for (j, a) in src {
        let e = dst.entry(*j).or_insert_with(Rational::zero);
        *e -= f * a;
        if e.is_zero() {
            dst.remove(j);
        }
    }
}

struct Tableau {
    /// Constraint rows; the last column is the right-hand side.
    rows: Vec<Vec<Rational>>,
    /// Reduced costs; the last entry is minus the objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Builds the tableau, runs phase one and strips artificials. `None`
    /// when infeasible.
    fn phase_one(
        active: &[(SparseRow, Rational)],
        col_of: &HashMap<usize, usize>,
        ncols: usize,
    ) -> Option<Tableau> {
        let m = active.len();
        let mut occurrences = vec![0usize; ncols];
        for (row, _) in active {
            for v in row.keys() {
                occurrences[col_of[v]] += 1;
            }
        }
        let mut dense: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut basis = vec![usize::MAX; m];
        let mut used = vec![false; ncols];
        for (i, (row, rhs)) in active.iter().enumerate() {
            let neg = rhs.is_negative();
            let mut d = vec![Rational::zero(); ncols + 1];
            for (v, a) in row {
                d[col_of[v]] = if neg { -a.clone() } else { a.clone() };
            }
            d[ncols] = rhs.abs();
            // crash basis: a column that occurs only here, with positive sign
            let crash = row
                .keys()
                .map(|v| col_of[v])
                .filter(|&c| occurrences[c] == 1 && !used[c] && d[c].is_positive())
                .min();
            if let Some(c) = crash {
                let a = d[c].clone();
                for x in d.iter_mut() {
                    *x /= &a;
                }
                used[c] = true;
                basis[i] = c;
            }
            dense.push(d);
        }
        let art_rows: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
        let width = ncols + art_rows.len() + 1;
        for row in dense.iter_mut() {
            let rhs = row.pop().unwrap();
            row.resize(width - 1, Rational::zero());
            row.push(rhs);
        }
        for (k, &i) in art_rows.iter().enumerate() {
            dense[i][ncols + k] = Rational::one();
            basis[i] = ncols + k;
        }
        let mut obj = vec![Rational::zero(); width];
        for &i in &art_rows {
            for j in 0..ncols {
                if !dense[i][j].is_zero() {
                    obj[j] -= &dense[i][j];
                }
            }
            obj[width - 1] -= &dense[i][width - 1];
        }
        let mut t = Tableau {
            rows: dense,
            obj,
            basis,
            width,
        };
        if !art_rows.is_empty() {
            t.iterate().expect("phase one is bounded below by zero");
            if !t.obj[width - 1].is_zero() {
                return None;
            }
            // drive remaining (zero-level) artificials out of the basis
            let mut redundant = Vec::new();
            for i in 0..t.rows.len() {
                if t.basis[i] < ncols {
                    continue;
                }
                match (0..ncols).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => redundant.push(i),
                }
            }
            for i in redundant.into_iter().rev() {
                t.rows.remove(i);
                t.basis.remove(i);
            }
            for row in t.rows.iter_mut() {
                let rhs = row.pop().unwrap();
                row.truncate(ncols);
                row.push(rhs);
            }
            t.width = ncols + 1;
        }
        t.obj = vec![Rational::zero(); t.width];
        Some(t)
    }

    fn set_objective(&mut self, cost: &[Rational]) {
        let w = self.width;
        let mut obj = vec![Rational::zero(); w];
        obj[..cost.len()].clone_from_slice(cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    obj[j] -= cb * a;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x /= &piv;
                }
            }
        }
        let nz: Vec<usize> = (0..self.width)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &prow[j];
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for &j in &nz {
                self.obj[j] -= &f * &prow[j];
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Primal simplex to optimality. Pricing is largest negative reduced
    /// cost with lowest-index ties, falling back to Bland's rule during
    /// long degenerate stretches.
    fn iterate(&mut self) -> Result<(), ()> {
        let rhs = self.width - 1;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..rhs {
                if !self.obj[j].is_negative() {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if enter.is_none_or(|e| self.obj[j] < self.obj[e]) {
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(());
            };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}
