use num_complex::Complex64;

use super::register::Register;
use super::state::PureState;
use super::{FockError, Result};

/// Canonical text form: one line `n1 n2 … nk  re  im` per stored term, in
/// basis order, amplitudes with 17 significant digits.
pub fn format_canonical(state: &PureState) -> String {
    let mut out = String::new();
    for (occ, a) in state.terms() {
        let counts: Vec<String> = occ.counts().iter().map(|n| n.to_string()).collect();
        out.push_str(&format!(
            "{}  {:.16e}  {:.16e}\n",
            counts.join(" "),
            a.re,
            a.im
        ));
    }
    out
}

/// Inverse of [`format_canonical`]. Blank lines and lines starting with `#` are skipped.
pub fn parse_canonical(register: Register, max_photons: u32, text: &str) -> Result<PureState> {
    let mut terms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |reason: String| FockError::Parse {
            line: lineno + 1,
            reason,
        };
        if fields.len() != register.len() + 2 {
            return Err(err(format!(
                "expected {} fields, found {}",
                register.len() + 2,
                fields.len()
            )));
        }
        let (counts, amp) = fields.split_at(register.len());
        let counts = counts
            .iter()
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|e| err(format!("bad count `{s}`: {e}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        let re: f64 = amp[0]
            .parse()
            .map_err(|e| err(format!("bad real part `{}`: {e}", amp[0])))?;
        let im: f64 = amp[1]
            .parse()
            .map_err(|e| err(format!("bad imaginary part `{}`: {e}", amp[1])))?;
        terms.push((counts, Complex64::new(re, im)));
    }
    PureState::from_terms(register, max_photons, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let r = Register::new(["aH", "bH"]).unwrap();
        let psi = PureState::from_terms(
            r.clone(),
            4,
            vec![
                (vec![1, 1], Complex64::new(0.1f64.sqrt(), -1.0 / 3.0)),
                (vec![0, 0], Complex64::new(std::f64::consts::PI / 7.0, 0.0)),
            ],
        )
        .unwrap();
        let text = format_canonical(&psi);
        assert!(text.starts_with("0 0  "));
        let back = parse_canonical(r, 4, &text).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let r = Register::new(["aH"]).unwrap();
        assert!(matches!(
            parse_canonical(r.clone(), 4, "1 0.5\n"),
            Err(FockError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_canonical(r, 4, "# x\nq 0.5 0\n"),
            Err(FockError::Parse { line: 2, .. })
        ));
    }
}
