//! Finite realizations of a marked Poisson process and the time-order
//! restrictions everything else is built on.
//!
//! A configuration is a multiset of atoms `(time, asset, jump)` kept sorted by
//! time. Every operation returns a new configuration; nothing mutates in place.
//! Atoms with equal times are neither before nor after each other: both
//! `restrict_before(t)` and the strict past of an atom exclude ties.

use std::fmt::Write as _;
use std::ops::{Bound, RangeBounds};

use crate::error::{Error, Result};
use crate::report::fmt_real;
use crate::scalar::Real;

/// A point `(s, j, z)`: event time, asset index (0-based) and jump size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<T> {
    pub time: T,
    pub asset: usize,
    pub jump: T,
}

impl<T: Real> Atom<T> {
    pub fn new(time: T, asset: usize, jump: T) -> Result<Self> {
        if !time.is_finite() || time < T::zero() {
            return Err(Error::InvalidAtom(format!("time {time} must be finite and nonnegative")));
        }
        if !jump.is_finite() || jump == T::zero() {
            return Err(Error::InvalidAtom(format!("jump {jump} must be finite and nonzero")));
        }
        Ok(Self { time, asset, jump })
    }

    /// Total order used to canonicalize lists of atoms.
    pub(crate) fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .partial_cmp(&other.time)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.asset.cmp(&other.asset))
            .then(self.jump.partial_cmp(&other.jump).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Finite configuration `μ` on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfiguration<T> {
    atoms: Vec<Atom<T>>,
    horizon: T,
}

impl<T: Real> PointConfiguration<T> {
    pub fn empty(horizon: T) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self { atoms: Vec::new(), horizon })
    }

    /// Builds a configuration from atoms in any order. Sorting is stable, so
    /// atoms with equal times keep their relative input order in storage.
    pub fn from_atoms(horizon: T, atoms: impl IntoIterator<Item = Atom<T>>) -> Result<Self> {
        check_horizon(horizon)?;
        let mut atoms: Vec<Atom<T>> = atoms.into_iter().collect();
        for a in &atoms {
            Atom::new(a.time, a.asset, a.jump)?;
            if a.time > horizon {
                return Err(outside(a.time, horizon));
            }
        }
        atoms.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
        Ok(Self { atoms, horizon })
    }

    /// Caller guarantees sorted, valid atoms within the horizon.
    pub(crate) fn from_sorted_unchecked(horizon: T, atoms: Vec<Atom<T>>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].time <= w[1].time));
        Self { atoms, horizon }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Atoms with time `< t`.
    pub fn restrict_before(&self, t: T) -> Self {
        let k = self.atoms.partition_point(|a| a.time < t);
        Self { atoms: self.atoms[..k].to_vec(), horizon: self.horizon }
    }

    /// Atoms with time `<= t`.
    pub fn restrict_upto(&self, t: T) -> Self {
        let k = self.atoms.partition_point(|a| a.time <= t);
        Self { atoms: self.atoms[..k].to_vec(), horizon: self.horizon }
    }

    /// Atoms with time `>= t`; the complement of [`restrict_before`](Self::restrict_before).
    pub fn restrict_from(&self, t: T) -> Self {
        let k = self.atoms.partition_point(|a| a.time < t);
        Self { atoms: self.atoms[k..].to_vec(), horizon: self.horizon }
    }

    /// Number of atoms strictly before `t`, without allocating.
    pub fn count_before(&self, t: T) -> usize {
        self.atoms.partition_point(|a| a.time < t)
    }

    /// `μ + δ_a`. A tie with existing atoms is stored after them.
    pub fn add_atom(&self, a: Atom<T>) -> Result<Self> {
        let a = Atom::new(a.time, a.asset, a.jump)?;
        if a.time > self.horizon {
            return Err(outside(a.time, self.horizon));
        }
        let k = self.atoms.partition_point(|b| b.time <= a.time);
        let mut atoms = Vec::with_capacity(self.atoms.len() + 1);
        atoms.extend_from_slice(&self.atoms[..k]);
        atoms.push(a);
        atoms.extend_from_slice(&self.atoms[k..]);
        Ok(Self { atoms, horizon: self.horizon })
    }

    /// `μ − δ_y` for the atom stored at `index`, together with that atom.
    pub fn remove_atom(&self, index: usize) -> Result<(Self, Atom<T>)> {
        if index >= self.atoms.len() {
            return Err(Error::IndexOutOfRange { index, len: self.atoms.len() });
        }
        let mut atoms = self.atoms.clone();
        let a = atoms.remove(index);
        Ok((Self { atoms, horizon: self.horizon }, a))
    }

    /// `μ(B)` for the rectangle `B = window × {asset}` (all assets when `None`).
    pub fn count(&self, window: impl RangeBounds<T>, asset: Option<usize>) -> usize {
        self.in_window(window)
            .iter()
            .filter(|a| asset.is_none_or(|j| a.asset == j))
            .count()
    }

    /// Atoms whose time lies in `window`.
    pub fn in_window(&self, window: impl RangeBounds<T>) -> &[Atom<T>] {
        let lo = match window.start_bound() {
            Bound::Included(&t) => self.atoms.partition_point(|a| a.time < t),
            Bound::Excluded(&t) => self.atoms.partition_point(|a| a.time <= t),
            Bound::Unbounded => 0,
        };
        let hi = match window.end_bound() {
            Bound::Included(&t) => self.atoms.partition_point(|a| a.time <= t),
            Bound::Excluded(&t) => self.atoms.partition_point(|a| a.time < t),
            Bound::Unbounded => self.atoms.len(),
        };
        if lo >= hi {
            &[]
        } else {
            &self.atoms[lo..hi]
        }
    }

    /// Superposition `μ + ν`; on equal times atoms of `self` come first.
    pub fn superpose(&self, other: &Self) -> Self {
        let mut atoms = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut k) = (0, 0);
        while i < self.atoms.len() && k < other.atoms.len() {
            if other.atoms[k].time < self.atoms[i].time {
                atoms.push(other.atoms[k]);
                k += 1;
            } else {
                atoms.push(self.atoms[i]);
                i += 1;
            }
        }
        atoms.extend_from_slice(&self.atoms[i..]);
        atoms.extend_from_slice(&other.atoms[k..]);
        Self { atoms, horizon: self.horizon.max(other.horizon) }
    }

    /// `past + δ_y + future` for a past strictly before `y.time` and a future
    /// strictly after it; both are already sorted so this is a concatenation.
    pub(crate) fn splice(past: &Self, y: Option<&Atom<T>>, future: &Self) -> Self {
        let mut atoms = Vec::with_capacity(past.len() + future.len() + 1);
        atoms.extend_from_slice(&past.atoms);
        atoms.extend(y.copied());
        atoms.extend_from_slice(&future.atoms);
        Self::from_sorted_unchecked(past.horizon, atoms)
    }

    /// CSV fragment with one `time,asset,jump` row per atom (no header).
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for a in &self.atoms {
            let _ = writeln!(out, "{},{},{}", fmt_real(a.time), a.asset, fmt_real(a.jump));
        }
        out
    }

    /// Parses the fragment written by [`to_csv_rows`](Self::to_csv_rows).
    /// A `time,asset,jump` header line is accepted and skipped.
    pub fn from_csv_rows(horizon: T, text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "time,asset,jump" {
                continue;
            }
            let bad = || Error::InvalidAtom(format!("line {}: `{line}`", n + 1));
            let mut it = line.split(',');
            let (Some(t), Some(j), Some(z), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(bad());
            };
            let t: f64 = t.trim().parse().map_err(|_| bad())?;
            let j: usize = j.trim().parse().map_err(|_| bad())?;
            let z: f64 = z.trim().parse().map_err(|_| bad())?;
            atoms.push(Atom::new(T::lit(t), j, T::lit(z))?);
        }
        Self::from_atoms(horizon, atoms)
    }
}

fn check_horizon<T: Real>(horizon: T) -> Result<()> {
    if horizon.is_finite() && horizon > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon {horizon} must be positive and finite")))
    }
}

fn outside<T: Real>(time: T, horizon: T) -> Error {
    Error::AtomOutsideHorizon { time: time.as_f64(), horizon: horizon.as_f64() }
}
