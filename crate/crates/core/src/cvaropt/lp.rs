use std::fmt::Write as _;

use super::OptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn token(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c'x` subject to dense rows and bounds `lower <= x <= upper`
/// (infinite bounds allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            names: (0..n_vars).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coefs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coefs.len(), self.n_vars());
        self.rows.push(LpRow { coefs, sense, rhs });
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(OptError::InvalidProblem("bound or name vector length".into()));
        }
        if let Some(i) = self.rows.iter().position(|r| r.coefs.len() != n) {
            return Err(OptError::InvalidProblem(format!("row {i} has the wrong length")));
        }
        if let Some(j) = (0..n).find(|&j| self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY) {
            return Err(OptError::InvalidProblem(format!("inconsistent bounds on {}", self.names[j])));
        }
        let finite = self.objective.iter().chain(self.rows.iter().flat_map(|r| r.coefs.iter().chain(std::iter::once(&r.rhs))));
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(OptError::InvalidProblem("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Plain-text dump:
    ///
    /// ```text
    /// lp <n_vars> <n_rows>
    /// var <name> <cost> <lower> <upper>      (one per variable; inf / -inf allowed)
    /// row <sense> <rhs> <coef_1> ... <coef_n> (sense is <=, = or >=)
    /// end
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!("lp {} {}\n", self.n_vars(), self.n_rows());
        for j in 0..self.n_vars() {
            let _ = writeln!(s, "var {} {:e} {:e} {:e}", self.names[j], self.objective[j], self.lower[j], self.upper[j]);
        }
        for r in &self.rows {
            let _ = write!(s, "row {} {:e}", r.sense.token(), r.rhs);
            for c in &r.coefs {
                let _ = write!(s, " {c:e}");
            }
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self, OptError> {
        let err = |line: usize, msg: &str| OptError::Parse { line, msg: msg.to_string() };
        let num = |tok: &str, line: usize| -> Result<f64, OptError> {
            match tok {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => tok.parse::<f64>().map_err(|_| err(line, &format!("bad number {tok:?}"))),
            }
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or_else(|| err(1, "empty input"))?;
        let h: Vec<&str> = head.split_whitespace().collect();
        if h.len() != 3 || h[0] != "lp" {
            return Err(err(ln, "expected `lp <n_vars> <n_rows>`"));
        }
        let n: usize = h[1].parse().map_err(|_| err(ln, "bad variable count"))?;
        let m: usize = h[2].parse().map_err(|_| err(ln, "bad row count"))?;
        let mut p = LpProblem::new(n);
        for j in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing var line"))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 5 || t[0] != "var" {
                return Err(err(ln, "expected `var <name> <cost> <lower> <upper>`"));
            }
            p.names[j] = t[1].to_string();
            p.objective[j] = num(t[2], ln)?;
            p.lower[j] = num(t[3], ln)?;
            p.upper[j] = num(t[4], ln)?;
        }
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing row line"))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != n + 3 || t[0] != "row" {
                return Err(err(ln, &format!("expected `row <sense> <rhs>` and {n} coefficients")));
            }
            let sense = match t[1] {
                "<=" => Sense::Le,
                "=" => Sense::Eq,
                ">=" => Sense::Ge,
                other => return Err(err(ln, &format!("bad sense {other:?}"))),
            };
            let rhs = num(t[2], ln)?;
            let coefs = t[3..].iter().map(|tok| num(tok, ln)).collect::<Result<Vec<_>, _>>()?;
            p.add_row(coefs, sense, rhs);
        }
        match lines.next() {
            Some((_, "end")) => {}
            Some((ln, _)) => return Err(err(ln, "expected `end`")),
            None => return Err(err(text.lines().count(), "missing `end`")),
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, -2.5, 0.1];
        p.lower[1] = f64::NEG_INFINITY;
        p.upper[2] = 4.0;
        p.names = vec!["theta_0".into(), "nu".into(), "u_0".into()];
        p.add_row(vec![1.0, 1.0, 0.0], Sense::Eq, 1.0);
        p.add_row(vec![0.3, 1.0, 1.0], Sense::Ge, 0.0);
        let back = LpProblem::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "lp 1 1\nvar x 1 0 inf\nrow ~ 1 2\nend\n";
        match LpProblem::from_text(text) {
            Err(OptError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
