//! Dancing Links over a sparse 0/1 matrix.
//!
//! Columns `0..ncols` are all primary. Rows are added once, before search.
//! Column choice is delegated to the caller so the planner can impose its
//! own ordering.

use alloc::vec::Vec;

pub struct Dlx {
    left: Vec<usize>,
    right: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
    col: Vec<usize>,
    row: Vec<usize>,
    size: Vec<usize>,
    ncols: usize,
}

/// Node 0 is the root; column `c` has header node `c + 1`.
const ROOT: usize = 0;

impl Dlx {
    pub fn new(ncols: usize) -> Self {
        let n = ncols + 1;
        let mut d = Dlx {
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            up: Vec::with_capacity(n),
            down: Vec::with_capacity(n),
            col: Vec::with_capacity(n),
            row: Vec::with_capacity(n),
            size: alloc::vec![0; n],
            ncols,
        };
        for i in 0..n {
            d.left.push(if i == 0 { ncols } else { i - 1 });
            d.right.push(if i == ncols { 0 } else { i + 1 });
            d.up.push(i);
            d.down.push(i);
            d.col.push(i);
            d.row.push(usize::MAX);
        }
        d
    }

    pub fn node_count(&self) -> usize {
        self.col.len()
    }

    /// Appends a row covering `cols` (column indices, any order, no repeats).
    pub fn add_row(&mut self, cols: &[usize], row_id: usize) {
        let first = self.col.len();
        for (i, &c) in cols.iter().enumerate() {
            let h = c + 1;
            let node = first + i;
            let last = self.up[h];
            self.up.push(last);
            self.down.push(h);
            self.down[last] = node;
            self.up[h] = node;
            self.left.push(if i == 0 { first + cols.len() - 1 } else { node - 1 });
            self.right.push(if i + 1 == cols.len() { first } else { node + 1 });
            self.col.push(h);
            self.row.push(row_id);
            self.size[h] += 1;
        }
    }

    fn cover(&mut self, h: usize) {
        let (l, r) = (self.left[h], self.right[h]);
        self.right[l] = r;
        self.left[r] = l;
        let mut i = self.down[h];
        while i != h {
            let mut j = self.right[i];
            while j != i {
                let (u, d) = (self.up[j], self.down[j]);
                self.down[u] = d;
                self.up[d] = u;
                self.size[self.col[j]] -= 1;
                j = self.right[j];
            }
            i = self.down[i];
        }
    }

    fn uncover(&mut self, h: usize) {
        let mut i = self.up[h];
        while i != h {
            let mut j = self.left[i];
            while j != i {
                let (u, d) = (self.up[j], self.down[j]);
                self.size[self.col[j]] += 1;
                self.down[u] = j;
                self.up[d] = j;
                j = self.left[j];
            }
            i = self.up[i];
        }
        let (l, r) = (self.left[h], self.right[h]);
        self.right[l] = h;
        self.left[r] = h;
    }

    /// Uncovered columns in index order.
    pub fn active_columns(&self) -> impl Iterator<Item = usize> + '_ {
        let mut h = self.right[ROOT];
        core::iter::from_fn(move || {
            if h == ROOT {
                return None;
            }
            let c = h - 1;
            h = self.right[h];
            Some(c)
        })
    }

    pub fn is_active(&self, c: usize) -> bool {
        let h = c + 1;
        self.right[self.left[h]] == h
    }

    /// Rows currently available in column `c`.
    pub fn column_size(&self, c: usize) -> usize {
        self.size[c + 1]
    }

    /// Depth-first search. `choose` picks the next column among the active
    /// ones or returns `Choice::Done` to accept the partial solution and
    /// `Choice::Dead` to backtrack. `tick` is called once per node visited and
    /// aborts the search by returning false.
    pub fn search<F, T>(&mut self, choose: &mut F, tick: &mut T) -> Outcome
    where
        F: FnMut(&Dlx) -> Choice,
        T: FnMut() -> bool,
    {
        let mut solution = Vec::new();
        match self.recurse(choose, tick, &mut solution) {
            Step::Found => Outcome::Found(solution),
            Step::Exhausted => Outcome::Exhausted,
            Step::Aborted => Outcome::Aborted,
        }
    }

    fn recurse<F, T>(&mut self, choose: &mut F, tick: &mut T, solution: &mut Vec<usize>) -> Step
    where
        F: FnMut(&Dlx) -> Choice,
        T: FnMut() -> bool,
    {
        if !tick() {
            return Step::Aborted;
        }
        let c = match choose(self) {
            Choice::Done => return Step::Found,
            Choice::Dead => return Step::Exhausted,
            Choice::Column(c) => c,
        };
        debug_assert!(c < self.ncols);
        let h = c + 1;
        self.cover(h);
        let mut r = self.down[h];
        while r != h {
            solution.push(self.row[r]);
            let mut j = self.right[r];
            while j != r {
                self.cover(self.col[j]);
                j = self.right[j];
            }
            let step = self.recurse(choose, tick, solution);
            if step != Step::Exhausted {
                return step;
            }
            let mut j = self.left[r];
            while j != r {
                self.uncover(self.col[j]);
                j = self.left[j];
            }
            solution.pop();
            r = self.down[r];
        }
        self.uncover(h);
        Step::Exhausted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Column(usize),
    Done,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Row ids of the chosen rows, in selection order.
    Found(Vec<usize>),
    Exhausted,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Found,
    Exhausted,
    Aborted,
}

/// Chooses the active column with the fewest rows; `Done` when none remain.
pub fn min_size_column(d: &Dlx) -> Choice {
    let mut best: Option<(usize, usize)> = None;
    for c in d.active_columns() {
        let s = d.column_size(c);
        if s == 0 {
            return Choice::Dead;
        }
        if best.is_none_or(|(_, bs)| s < bs) {
            best = Some((c, s));
        }
    }
    best.map_or(Choice::Done, |(c, _)| Choice::Column(c))
}
