//! The mode bank: one realization of the stochastic field.
//!
//! Modes sit on the grid `omega_n = n / N`, `n = 1..=n_max`. Each mode owns
//! 22 unit Gaussians (`A_n`, `B_n` with three components, `beta1_n`,
//! `beta2_n` with eight), drawn from streams keyed by `(seed, channel, n)`.
//! A multiplicative window selects the admitted modes; moving the cutoff
//! never redraws a coefficient.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::error::{CheckpointError, Result, SedError};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeGrid {
    /// Grid denominator `N`; the spacing is `1/N`.
    pub n_per_unit: u64,
    /// Highest mode index; `omega_max = n_max / N`.
    pub n_max: u64,
}

impl ModeGrid {
    pub fn new(n_per_unit: u64, n_max: u64) -> Result<Self> {
        if n_per_unit == 0 || n_max == 0 {
            return Err(SedError::Config(format!(
                "mode grid needs N >= 1 and n_max >= 1, got N = {n_per_unit}, n_max = {n_max}"
            )));
        }
        Ok(Self { n_per_unit, n_max })
    }

    /// Smallest grid reaching `omega_max`.
    pub fn covering(n_per_unit: u64, omega_max: f64) -> Result<Self> {
        let n_max = (omega_max * n_per_unit as f64).ceil().max(1.0) as u64;
        Self::new(n_per_unit, n_max)
    }

    #[inline]
    pub fn d_omega(&self) -> f64 {
        1.0 / self.n_per_unit as f64
    }

    #[inline]
    pub fn omega(&self, n: u64) -> f64 {
        n as f64 / self.n_per_unit as f64
    }

    pub fn omega_max(&self) -> f64 {
        self.omega(self.n_max)
    }

    /// Frequencies of modes `1..=n_max`.
    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.n_max).map(|n| self.omega(n)).collect()
    }
}

/// Which coefficient channels to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    /// `A_n` and `B_n` only; enough for the field at the origin.
    Vector,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeCoefficients {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub beta1: [f64; 8],
    pub beta2: [f64; 8],
}

impl ModeCoefficients {
    pub fn draw(seed: u64, n: u64, channels: Channels) -> Self {
        let mut c = Self::default();
        fill(&mut c.a, seed, streams::MODE_A, n);
        fill(&mut c.b, seed, streams::MODE_B, n);
        if channels == Channels::All {
            fill(&mut c.beta1, seed, streams::MODE_BETA1, n);
            fill(&mut c.beta2, seed, streams::MODE_BETA2, n);
        }
        c
    }
}

fn fill(out: &mut [f64], seed: u64, stream: u64, n: u64) {
    let mut rng = stream_rng(seed, stream, n);
    for x in out.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }
}

/// Moving-cutoff window: modes `n <= n_cut` are admitted, optionally with a
/// raised-cosine edge over the top 2% of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub n_cut: u64,
    pub omega_cutoff: f64,
    pub taper: bool,
}

impl Window {
    pub const EMPTY: Self = Self { n_cut: 0, omega_cutoff: 0.0, taper: false };

    fn edge_width(&self) -> u64 {
        ((self.n_cut as f64) * 0.02).ceil() as u64
    }

    #[inline]
    pub fn weight(&self, n: u64) -> f64 {
        if n == 0 || n > self.n_cut {
            return 0.0;
        }
        if !self.taper {
            return 1.0;
        }
        let m = self.edge_width();
        let start = self.n_cut - m;
        if n <= start {
            1.0
        } else {
            let x = (n - start) as f64 / (m + 1) as f64;
            0.5 * (1.0 + (PI * x).cos())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowChange {
    pub entering: u64,
    pub leaving: u64,
    pub highest_mode: u64,
    pub omega_cutoff: f64,
    pub empty: bool,
}

#[derive(Debug, Clone)]
pub struct ModeBank {
    seed: u64,
    grid: ModeGrid,
    tau_c: f64,
    window: Window,
    /// Materialized coefficients for modes `1..=modes.len()`.
    modes: Vec<ModeCoefficients>,
}

/// Build a bank whose grid reaches at least `omega_max`.
pub fn build_mode_bank(grid: ModeGrid, omega_max: f64, seed: u64, tau_c: f64) -> Result<ModeBank> {
    if grid.omega_max() < omega_max {
        return Err(SedError::Config(format!(
            "grid top n_max/N = {} is below the requested omega_max = {omega_max}",
            grid.omega_max()
        )));
    }
    Ok(ModeBank::new(seed, grid, tau_c))
}

impl ModeBank {
    pub fn new(seed: u64, grid: ModeGrid, tau_c: f64) -> Self {
        Self { seed, grid, tau_c, window: Window::EMPTY, modes: Vec::new() }
    }

    /// Bank with every mode of the grid admitted.
    pub fn full(seed: u64, grid: ModeGrid, tau_c: f64) -> Self {
        let mut bank = Self::new(seed, grid, tau_c);
        bank.set_window(Window { n_cut: grid.n_max, omega_cutoff: grid.omega_max(), taper: false });
        bank
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    /// The cutoff function is applied at evaluation time, so changing it
    /// leaves the coefficients untouched.
    pub fn set_tau_c(&mut self, tau_c: f64) {
        self.tau_c = tau_c;
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn high_water(&self) -> u64 {
        self.modes.len() as u64
    }

    pub fn materialize_to(&mut self, n: u64) {
        let n = n.min(self.grid.n_max);
        let have = self.modes.len() as u64;
        if n > have {
            self.modes.reserve((n - have) as usize);
            for m in (have + 1)..=n {
                self.modes.push(ModeCoefficients::draw(self.seed, m, Channels::All));
            }
        }
    }

    /// Coefficients of mode `n`. Panics if `n` has not been materialized.
    #[inline]
    pub fn coefficients(&self, n: u64) -> &ModeCoefficients {
        &self.modes[(n - 1) as usize]
    }

    /// Replace the coefficients of one mode (for hand-built test banks).
    pub fn set_coefficients(&mut self, n: u64, c: ModeCoefficients) {
        self.materialize_to(n);
        self.modes[(n - 1) as usize] = c;
    }

    /// Zero every materialized coefficient.
    pub fn zeroed(mut self) -> Self {
        for m in &mut self.modes {
            *m = ModeCoefficients::default();
        }
        self
    }

    pub fn set_window(&mut self, window: Window) {
        self.materialize_to(window.n_cut);
        self.window = window;
    }

    pub fn set_taper(&mut self, taper: bool) {
        self.window.taper = taper;
    }

    /// `W(omega) = exp(-omega tau_c / 2)`.
    #[inline]
    pub fn cutoff(&self, omega: f64) -> f64 {
        (-0.5 * omega * self.tau_c).exp()
    }

    /// `sqrt(d_omega omega_n / pi) W(omega_n) w_n`, the amplitude of the
    /// order-one term of the vector potential.
    #[inline]
    pub fn amplitude(&self, n: u64) -> f64 {
        let w = self.window.weight(n);
        if w == 0.0 {
            return 0.0;
        }
        let omega = self.grid.omega(n);
        (self.grid.d_omega() * omega / PI).sqrt() * self.cutoff(omega) * w
    }

    /// Admitted modes, in increasing order.
    pub fn admitted(&self) -> impl Iterator<Item = u64> + '_ {
        1..=self.window.n_cut
    }

    /// Admit the modes with `omega_n <= multiplier * omega_k`.
    pub fn update_window(&mut self, omega_k: f64, multiplier: f64) -> Result<WindowChange> {
        if !(omega_k > 0.0) {
            return Err(SedError::Config(format!("Keplerian frequency must be positive, got {omega_k}")));
        }
        let cutoff = multiplier * omega_k;
        if cutoff > self.grid.omega_max() {
            return Err(SedError::GridTooShort { cutoff, omega_max: self.grid.omega_max() });
        }
        let n_cut = ((cutoff * self.grid.n_per_unit as f64).floor() as u64).min(self.grid.n_max);
        let old = self.window.n_cut;
        self.set_window(Window { n_cut, omega_cutoff: cutoff, taper: self.window.taper });
        Ok(WindowChange {
            entering: n_cut.saturating_sub(old),
            leaving: old.saturating_sub(n_cut),
            highest_mode: n_cut,
            omega_cutoff: cutoff,
            empty: n_cut == 0,
        })
    }

    pub fn snapshot(&self) -> BankSnapshot {
        BankSnapshot {
            seed: self.seed,
            n_per_unit: self.grid.n_per_unit,
            n_max: self.grid.n_max,
            n_cut: self.window.n_cut,
            omega_cutoff: self.window.omega_cutoff,
            taper: self.window.taper,
            high_water: self.high_water(),
        }
    }

    pub fn restore(snapshot: &BankSnapshot, tau_c: f64) -> Result<Self> {
        let grid = ModeGrid::new(snapshot.n_per_unit, snapshot.n_max)?;
        if snapshot.n_cut > grid.n_max || snapshot.high_water > grid.n_max {
            return Err(SedError::Config("bank snapshot window exceeds its grid".into()));
        }
        let mut bank = Self::new(snapshot.seed, grid, tau_c);
        bank.materialize_to(snapshot.high_water);
        bank.set_window(Window {
            n_cut: snapshot.n_cut,
            omega_cutoff: snapshot.omega_cutoff,
            taper: snapshot.taper,
        });
        Ok(bank)
    }
}

/// Everything needed to regenerate a bank; coefficients are not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankSnapshot {
    pub seed: u64,
    pub n_per_unit: u64,
    pub n_max: u64,
    pub n_cut: u64,
    pub omega_cutoff: f64,
    pub taper: bool,
    pub high_water: u64,
}

impl BankSnapshot {
    pub const VERSION: u16 = 1;

    /// Layout (little endian): version u16, seed u64, N u64, n_max u64,
    /// n_cut u64, omega_cutoff f64, taper u8, high_water u64.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_u16::<LittleEndian>(Self::VERSION)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u64::<LittleEndian>(self.n_per_unit)?;
        w.write_u64::<LittleEndian>(self.n_max)?;
        w.write_u64::<LittleEndian>(self.n_cut)?;
        w.write_f64::<LittleEndian>(self.omega_cutoff)?;
        w.write_u8(self.taper as u8)?;
        w.write_u64::<LittleEndian>(self.high_water)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CheckpointError> {
        let version = r.read_u16::<LittleEndian>().map_err(io_err)?;
        if version != Self::VERSION {
            return Err(CheckpointError::Version { found: version as u32, expected: Self::VERSION as u32 });
        }
        let seed = r.read_u64::<LittleEndian>().map_err(io_err)?;
        let n_per_unit = r.read_u64::<LittleEndian>().map_err(io_err)?;
        let n_max = r.read_u64::<LittleEndian>().map_err(io_err)?;
        let n_cut = r.read_u64::<LittleEndian>().map_err(io_err)?;
        let omega_cutoff = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let taper = match r.read_u8().map_err(io_err)? {
            0 => false,
            1 => true,
            other => return Err(CheckpointError::Malformed(format!("taper flag {other}"))),
        };
        let high_water = r.read_u64::<LittleEndian>().map_err(io_err)?;
        Ok(Self { seed, n_per_unit, n_max, n_cut, omega_cutoff, taper, high_water })
    }
}

pub(crate) fn io_err(e: std::io::Error) -> CheckpointError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        CheckpointError::Truncated
    } else {
        CheckpointError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_frequencies() {
        let g = ModeGrid::new(10, 3).unwrap();
        assert_eq!(g.frequencies(), vec![0.1, 0.2, 0.3]);
        assert!(ModeGrid::new(0, 3).is_err());
        assert!(ModeGrid::new(3, 0).is_err());
    }

    #[test]
    fn build_rejects_short_grid() {
        let g = ModeGrid::new(10, 20).unwrap();
        assert!(build_mode_bank(g, 2.0, 1, 0.0).is_ok());
        assert!(build_mode_bank(g, 2.5, 1, 0.0).is_err());
    }

    #[test]
    fn banks_are_reproducible() {
        let g = ModeGrid::new(10, 20).unwrap();
        let a = ModeBank::full(42, g, 0.0);
        let b = ModeBank::full(42, g, 0.0);
        for n in 1..=20 {
            assert_eq!(a.coefficients(n), b.coefficients(n));
        }
        let c = ModeBank::full(43, g, 0.0);
        assert_ne!(a.coefficients(1), c.coefficients(1));
    }

    #[test]
    fn materialization_order_does_not_matter() {
        let g = ModeGrid::new(10, 50).unwrap();
        let mut grown = ModeBank::new(9, g, 0.0);
        grown.materialize_to(5);
        grown.materialize_to(17);
        grown.materialize_to(50);
        let direct = ModeBank::full(9, g, 0.0);
        for n in 1..=50 {
            assert_eq!(grown.coefficients(n), direct.coefficients(n));
            assert_eq!(*direct.coefficients(n), ModeCoefficients::draw(9, n, Channels::All));
        }
        // a larger grid extends the same draws
        let bigger = ModeBank::full(9, ModeGrid::new(10, 80).unwrap(), 0.0);
        assert_eq!(bigger.coefficients(50), direct.coefficients(50));
    }

    #[test]
    fn coefficient_variance_is_unit() {
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut count = 0.0;
        for n in 1..=34_000u64 {
            let c = ModeCoefficients::draw(2024, n, Channels::Vector);
            for x in c.a {
                sum += x;
                sum2 += x * x;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sum2 / count - mean * mean;
        assert!(count >= 1e5);
        assert!(mean.abs() < 0.015, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn window_updates() {
        let g = ModeGrid::new(100, 2000).unwrap();
        let mut bank = ModeBank::new(1, g, 0.0);
        let first = bank.update_window(2.0, 2.5).unwrap();
        assert_eq!(first.highest_mode, 500);
        assert_eq!(first.entering, 500);
        let again = bank.update_window(2.0, 2.5).unwrap();
        assert_eq!((again.entering, again.leaving), (0, 0));
        let down = bank.update_window(1.0, 2.5).unwrap();
        assert_eq!((down.entering, down.leaving, down.highest_mode), (0, 250, 250));
        // coefficients survive the shrink
        assert_eq!(*bank.coefficients(400), ModeCoefficients::draw(1, 400, Channels::All));
        let empty = bank.update_window(1e-3, 2.5).unwrap();
        assert!(empty.empty);
        assert_eq!(empty.highest_mode, 0);
        assert!(matches!(bank.update_window(10.0, 2.5), Err(SedError::GridTooShort { .. })));
    }

    #[test]
    fn production_cutoff_arithmetic() {
        let omega_k = crate::units::kepler_frequency(-1.6).unwrap();
        let g = ModeGrid::covering(100_000, 15.0).unwrap();
        let mut bank = ModeBank::new(3, g, 0.0);
        // do not materialize 1.4M modes here; only check the arithmetic
        let cutoff = 2.5 * omega_k;
        assert!((cutoff - 14.31).abs() < 0.01);
        let n_cut = (cutoff * 100_000.0).floor() as u64;
        assert_eq!(n_cut / 1000, 1431);
        bank.set_window(Window::EMPTY);
        assert!(g.n_max >= n_cut);
    }

    #[test]
    fn taper_is_monotone_and_bounded() {
        let w = Window { n_cut: 1000, omega_cutoff: 1.0, taper: true };
        assert_eq!(w.weight(980), 1.0);
        let mut last = 1.0;
        for n in 981..=1000 {
            let x = w.weight(n);
            assert!(x < last && x > 0.0);
            last = x;
        }
        assert_eq!(w.weight(1001), 0.0);
    }

    #[test]
    fn snapshot_round_trip_and_truncation() {
        let g = ModeGrid::new(50, 400).unwrap();
        let mut bank = ModeBank::new(77, g, 0.01);
        bank.update_window(3.0, 2.5).unwrap();
        let snap = bank.snapshot();
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = BankSnapshot::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, snap);
        let restored = ModeBank::restore(&back, 0.01).unwrap();
        assert_eq!(restored.window(), bank.window());
        assert_eq!(restored.coefficients(300), bank.coefficients(300));
        let cut = &buf[..buf.len() - 3];
        assert_eq!(BankSnapshot::read_from(&mut &cut[..]), Err(CheckpointError::Truncated));
    }
}
