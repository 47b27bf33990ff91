//! Ratio measurement of the analog front-end.
//!
//! The front-end drives the same stimulus through a precision resistor and
//! through the body; the unknown impedance follows from the ratio of the two
//! currents, which cancels the stimulus phase and latency.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Upper bound on the peak-to-peak stimulus voltage.
pub const MAX_STIMULUS_VPP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeConfig {
    /// Hz.
    pub stimulus_freq: f64,
    /// Volts peak-to-peak.
    pub stimulus_vpp: f64,
    /// Reference impedance, ohms.
    pub z_known: Complex64,
}

impl Default for AfeConfig {
    fn default() -> Self {
        Self { stimulus_freq: 100_000.0, stimulus_vpp: MAX_STIMULUS_VPP, z_known: Complex64::new(1000.0, 0.0) }
    }
}

impl AfeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stimulus_vpp > 0.0 && self.stimulus_vpp <= MAX_STIMULUS_VPP) {
            return Err(Error::InvalidConfig(format!(
                "stimulus of {} Vpp outside (0, {MAX_STIMULUS_VPP}]",
                self.stimulus_vpp
            )));
        }
        if !(self.stimulus_freq > 0.0) {
            return Err(Error::InvalidConfig("stimulus frequency must be positive".into()));
        }
        if self.z_known.norm() == 0.0 {
            return Err(Error::InvalidConfig("reference impedance must be non-zero".into()));
        }
        Ok(())
    }

    /// Phasor currents through the reference and through `z_test` for the
    /// configured stimulus amplitude.
    pub fn currents(&self, z_test: Complex64) -> (Complex64, Complex64) {
        let v = Complex64::new(self.stimulus_vpp / 2.0, 0.0);
        (v / self.z_known, v / z_test)
    }

    pub fn measure(&self, i_known: Complex64, i_test: Complex64) -> Result<Complex64> {
        afe_ratio_measurement(i_known, i_test, self.z_known)
    }
}

/// `Z_test = I_known / I_test · Z_known`.
pub fn afe_ratio_measurement(i_known: Complex64, i_test: Complex64, z_known: Complex64) -> Result<Complex64> {
    if i_test.norm() == 0.0 {
        return Err(Error::ZeroCurrent);
    }
    Ok(i_known / i_test * z_known)
}
