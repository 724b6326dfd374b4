use nalgebra::{DMatrix, SymmetricEigen};

use super::state::StateVector;

/// Von Neumann entropy (natural log) of the reduced state of sites `0..⌊n/2⌋`.
pub fn half_chain_entropy(state: &StateVector) -> f64 {
    let n = state.n();
    let left = n / 2;
    let rows = 1usize << left;
    let cols = 1usize << (n - left);
    if rows == 1 {
        return 0.0;
    }
    let amps = state.amplitudes();
    // amplitude index = left_bits + (right_bits << left)
    let m = DMatrix::from_fn(rows, cols, |l, r| amps[l + (r << left)]);
    let rho = &m * m.adjoint();
    let eig = SymmetricEigen::new(rho);
    let s: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.ln())
        .sum();
    s.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::initial_state;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn product_states_are_unentangled() {
        assert_relative_eq!(
            half_chain_entropy(&initial_state(6).unwrap()),
            0.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            half_chain_entropy(&StateVector::basis_state(5, 0b10011).unwrap()),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn bell_pair_has_log_two() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        // (|++⟩ + |−−⟩)/√2 in the x basis: indices 0b00 and 0b11
        let psi = StateVector::from_amplitudes(vec![
            Complex64::new(h, 0.0),
            z,
            z,
            Complex64::new(h, 0.0),
        ])
        .unwrap();
        assert_relative_eq!(
            half_chain_entropy(&psi),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn odd_chains_split_below_the_middle() {
        // Bell pair across sites 0 and 1 with a spectator at site 2: the cut
        // after site 0 sees one ebit
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0b000] = Complex64::new(h, 0.0);
        amps[0b011] = Complex64::new(h, 0.0);
        let psi = StateVector::from_amplitudes(amps).unwrap();
        assert_relative_eq!(
            half_chain_entropy(&psi),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }
}
