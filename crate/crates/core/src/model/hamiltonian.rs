use ndarray::Array2;
use num_complex::Complex64;

use crate::waveform::WaveformSpec;

/// One upper-triangular entry of a real symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// Time-dependent real symmetric generator on a labeled basis,
///
/// ```text
/// H(t) = H_static + Σ_k f_k(t) · H_k
/// ```
///
/// with each `f_k` a control waveform. Entries are stored upper-triangular
/// (`row <= col`) and mirrored on application.
#[derive(Debug, Clone)]
pub struct BranchHamiltonian {
    basis: Vec<String>,
    initial: usize,
    static_part: Vec<Entry>,
    driven: Vec<(WaveformSpec, Vec<Entry>)>,
    duration: f64,
    reversed: bool,
}

impl BranchHamiltonian {
    pub(crate) fn new(basis: Vec<String>, initial: usize, duration: f64) -> Self {
        Self {
            basis,
            initial,
            static_part: Vec::new(),
            driven: Vec::new(),
            duration,
            reversed: false,
        }
    }

    fn normalized(row: usize, col: usize, weight: f64) -> Entry {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Entry { row, col, weight }
    }

    /// Adds `weight` to both (row, col) and (col, row) of the static part.
    pub(crate) fn add_static(&mut self, row: usize, col: usize, weight: f64) {
        if weight != 0.0 {
            push_merged(&mut self.static_part, Self::normalized(row, col, weight));
        }
    }

    /// Adds `weight · f(t)` to both (row, col) and (col, row).
    pub(crate) fn add_driven(&mut self, waveform: &WaveformSpec, row: usize, col: usize, weight: f64) {
        if weight == 0.0 {
            return;
        }
        let e = Self::normalized(row, col, weight);
        match self.driven.iter_mut().find(|(w, _)| w == waveform) {
            Some((_, entries)) => push_merged(entries, e),
            None => self.driven.push((waveform.clone(), vec![e])),
        }
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn initial_index(&self) -> usize {
        self.initial
    }

    /// Pulse duration in µs; the generator is defined on [0, duration].
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == label)
    }

    pub fn static_entries(&self) -> &[Entry] {
        &self.static_part
    }

    pub fn driven_terms(&self) -> &[(WaveformSpec, Vec<Entry>)] {
        &self.driven
    }

    /// The generator `G(s) = -H(T - s)`, whose evolution over [0, T] is the
    /// inverse of this one's.
    pub fn time_reversed(&self) -> Self {
        let mut h = self.clone();
        h.reversed = !self.reversed;
        h
    }

    #[inline]
    fn map_time(&self, t: f64) -> (f64, f64) {
        if self.reversed {
            ((self.duration - t).clamp(0.0, self.duration), -1.0)
        } else {
            (t.clamp(0.0, self.duration), 1.0)
        }
    }

    /// Dense H(t).
    pub fn generator(&self, t: f64) -> Array2<Complex64> {
        let n = self.dim();
        let mut m = Array2::<Complex64>::zeros((n, n));
        let (tt, sign) = self.map_time(t);
        let mut put = |e: &Entry, scale: f64| {
            let v = Complex64::new(sign * e.weight * scale, 0.0);
            m[[e.row, e.col]] += v;
            if e.row != e.col {
                m[[e.col, e.row]] += v;
            }
        };
        for e in &self.static_part {
            put(e, 1.0);
        }
        for (w, entries) in &self.driven {
            let f = w.value(tt);
            for e in entries {
                put(e, f);
            }
        }
        m
    }

    /// Writes `-i H(t) ψ` into `out`.
    #[inline]
    pub fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let (tt, sign) = self.map_time(t);
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        accumulate(&self.static_part, sign, psi, out);
        for (w, entries) in &self.driven {
            let f = w.value(tt);
            if f != 0.0 {
                accumulate(entries, sign * f, psi, out);
            }
        }
        for o in out.iter_mut() {
            *o = Complex64::new(o.im, -o.re);
        }
    }

    /// Largest absolute diagonal plus off-diagonal row sum over a few
    /// sample times; a cheap bound on ‖H‖ used to pick the first step.
    pub fn norm_estimate(&self) -> f64 {
        (0..=8)
            .map(|k| {
                let g = self.generator(self.duration * k as f64 / 8.0);
                g.rows()
                    .into_iter()
                    .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Whether any entry of H(t) is non-finite at sample times.
    pub fn is_finite(&self) -> bool {
        self.static_part.iter().all(|e| e.weight.is_finite())
            && self.driven.iter().all(|(w, es)| {
                es.iter().all(|e| e.weight.is_finite())
                    && (0..=4).all(|k| w.value(self.duration * k as f64 / 4.0).is_finite())
            })
    }

    /// Keeps only the basis states connected to the initial state by some
    /// non-zero entry, re-indexing everything.
    pub(crate) fn prune_unreachable(self) -> Self {
        let n = self.dim();
        let mut adj = vec![Vec::new(); n];
        let all = self
            .static_part
            .iter()
            .chain(self.driven.iter().flat_map(|(_, es)| es.iter()));
        for e in all {
            if e.row != e.col {
                adj[e.row].push(e.col);
                adj[e.col].push(e.row);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut basis = Vec::new();
        for (i, label) in self.basis.iter().enumerate() {
            if seen[i] {
                map[i] = basis.len();
                basis.push(label.clone());
            }
        }
        let remap = |es: &[Entry]| -> Vec<Entry> {
            es.iter()
                .filter(|e| seen[e.row] && seen[e.col])
                .map(|e| Entry {
                    row: map[e.row],
                    col: map[e.col],
                    weight: e.weight,
                })
                .collect()
        };
        Self {
            initial: map[self.initial],
            static_part: remap(&self.static_part),
            driven: self
                .driven
                .iter()
                .map(|(w, es)| (w.clone(), remap(es)))
                .filter(|(_, es)| !es.is_empty())
                .collect(),
            basis,
            duration: self.duration,
            reversed: self.reversed,
        }
    }
}

fn push_merged(entries: &mut Vec<Entry>, e: Entry) {
    match entries.iter_mut().find(|x| x.row == e.row && x.col == e.col) {
        Some(x) => x.weight += e.weight,
        None => entries.push(e),
    }
}

#[inline]
fn accumulate(entries: &[Entry], scale: f64, psi: &[Complex64], out: &mut [Complex64]) {
    for e in entries {
        let w = e.weight * scale;
        out[e.row] += psi[e.col] * w;
        if e.row != e.col {
            out[e.col] += psi[e.row] * w;
        }
    }
}
