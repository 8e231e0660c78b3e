//! Text grammar for kernels.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | primary
//! primary:= number | coord | call | '(' expr ')'
//! call   := name '(' expr (',' expr)* ')'
//! ```
//!
//! Calls: `pow`, `abs`, `exp`, `max`, `min`, and `indicator(box(a,b), ...)`
//! with one box per axis. Coordinates are `x`, `y`, `z` or `x1` .. `xd`.
//! Support is inferred structurally from indicators; decay certificates for
//! unbounded kernels are fitted from log-spaced probes and then spot-checked
//! like any declared certificate.

use crate::error::{Error, Result};
use crate::kernel::{BoxDomain, Decay, Kernel};

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Exp(Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Indicator(Vec<(f64, f64)>),
}

impl Expr {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(i) => x[*i],
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Abs(e) => e.eval(x).abs(),
            Expr::Exp(e) => e.eval(x).exp(),
            Expr::Max(a, b) => a.eval(x).max(b.eval(x)),
            Expr::Min(a, b) => a.eval(x).min(b.eval(x)),
            Expr::Indicator(boxes) => {
                for (axis, (lo, hi)) in boxes.iter().enumerate() {
                    if x[axis] < *lo || x[axis] >= *hi {
                        return 0.0;
                    }
                }
                1.0
            }
        }
    }

    fn has_indicator(&self) -> bool {
        match self {
            Expr::Indicator(_) => true,
            Expr::Num(_) | Expr::Coord(_) => false,
            Expr::Neg(e) | Expr::Abs(e) | Expr::Exp(e) => e.has_indicator(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Max(a, b)
            | Expr::Min(a, b) => a.has_indicator() || b.has_indicator(),
        }
    }

    /// Structural support box: present when every summand is masked by an
    /// indicator.
    fn support(&self, dim: usize) -> Option<BoxDomain> {
        match self {
            Expr::Indicator(boxes) => BoxDomain::new(
                boxes.iter().map(|b| b.0).collect(),
                boxes.iter().map(|b| b.1).collect(),
            )
            .ok(),
            Expr::Mul(a, b) => match (a.support(dim), b.support(dim)) {
                (Some(u), Some(v)) => intersect(&u, &v),
                (Some(u), None) | (None, Some(u)) => Some(u),
                (None, None) => None,
            },
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Max(a, b) | Expr::Min(a, b) => {
                match (a.support(dim), b.support(dim)) {
                    (Some(u), Some(v)) => Some(union(&u, &v)),
                    _ => None,
                }
            }
            Expr::Neg(e) => e.support(dim),
            _ => None,
        }
    }

    fn as_pure_indicator(&self) -> Option<&[(f64, f64)]> {
        match self {
            Expr::Indicator(boxes) => Some(boxes),
            _ => None,
        }
    }
}

fn intersect(a: &BoxDomain, b: &BoxDomain) -> Option<BoxDomain> {
    let lo: Vec<f64> = a.lo.iter().zip(&b.lo).map(|(x, y)| x.max(*y)).collect();
    let hi: Vec<f64> = a.hi.iter().zip(&b.hi).map(|(x, y)| x.min(*y)).collect();
    BoxDomain::new(lo, hi).ok()
}

fn union(a: &BoxDomain, b: &BoxDomain) -> BoxDomain {
    BoxDomain {
        lo: a.lo.iter().zip(&b.lo).map(|(x, y)| x.min(*y)).collect(),
        hi: a.hi.iter().zip(&b.hi).map(|(x, y)| x.max(*y)).collect(),
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.call_or_coord(),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.error("malformed number"))
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    fn call_or_coord(&mut self) -> Result<Expr> {
        let at = self.pos;
        let name = self.ident();
        if self.peek() != Some(b'(') {
            return self.coord(&name, at);
        }
        self.pos += 1; // consume '('
        match name.as_str() {
            "abs" | "exp" => {
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "abs" => Expr::Abs(Box::new(a)),
                    _ => Expr::Exp(Box::new(a)),
                })
            }
            "pow" | "max" | "min" => {
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "pow" => Expr::Pow(Box::new(a), Box::new(b)),
                    "max" => Expr::Max(Box::new(a), Box::new(b)),
                    _ => Expr::Min(Box::new(a), Box::new(b)),
                })
            }
            "indicator" => self.indicator(at),
            "box" => Err(Error::Parse {
                pos: at,
                msg: "box(..) is only valid inside indicator(..)".into(),
            }),
            other => Err(Error::Parse {
                pos: at,
                msg: format!("unknown function '{other}'"),
            }),
        }
    }

    fn indicator(&mut self, at: usize) -> Result<Expr> {
        let mut boxes = Vec::new();
        loop {
            let name = self.ident();
            if name != "box" {
                return Err(self.error("indicator expects box(lo, hi) arguments"));
            }
            self.expect(b'(')?;
            let lo = self.const_expr()?;
            self.expect(b',')?;
            let hi = self.const_expr()?;
            self.expect(b')')?;
            if !(lo < hi) {
                return Err(self.error(format!("empty box [{lo}, {hi})")));
            }
            boxes.push((lo, hi));
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error("expected ',' or ')' in indicator")),
            }
        }
        if boxes.len() != self.dim {
            return Err(Error::Parse {
                pos: at,
                msg: format!(
                    "indicator has {} boxes but the dimension is {}",
                    boxes.len(),
                    self.dim
                ),
            });
        }
        Ok(Expr::Indicator(boxes))
    }

    fn const_expr(&mut self) -> Result<f64> {
        let at = self.pos;
        let e = self.expr()?;
        let v = e.eval(&vec![f64::NAN; self.dim]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse {
                pos: at,
                msg: "box bounds must be constant".into(),
            })
        }
    }

    fn coord(&mut self, name: &str, at: usize) -> Result<Expr> {
        let axis = match name {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => name
                .strip_prefix('x')
                .and_then(|n| n.parse::<usize>().ok())
                .and_then(|n| n.checked_sub(1)),
        };
        match axis {
            Some(a) if a < self.dim => Ok(Expr::Coord(a)),
            Some(a) => Err(Error::Parse {
                pos: at,
                msg: format!(
                    "coordinate '{name}' is axis {} but the dimension is {}",
                    a + 1,
                    self.dim
                ),
            }),
            None => Err(Error::Parse {
                pos: at,
                msg: format!("unknown identifier '{name}'"),
            }),
        }
    }
}

/// Parses a kernel expression in the given dimension.
pub fn parse_kernel(src: &str, dim: usize) -> Result<Kernel> {
    if dim == 0 || dim > 6 {
        return Err(Error::invalid("dimension must be between 1 and 6"));
    }
    let mut parser = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        dim,
    };
    let ast = parser.expr()?;
    parser.skip_ws();
    if parser.pos != src.len() {
        return Err(Error::Parse {
            pos: parser.pos,
            msg: "trailing input after expression".into(),
        });
    }
    build_kernel(ast, dim)
}

fn build_kernel(ast: Expr, dim: usize) -> Result<Kernel> {
    // a bare indicator keeps its exact-overlap integration path
    if let Some(boxes) = ast.as_pure_indicator() {
        let domain = BoxDomain::new(
            boxes.iter().map(|b| b.0).collect(),
            boxes.iter().map(|b| b.1).collect(),
        )?;
        return Ok(Kernel::indicator(domain));
    }
    let continuous = !ast.has_indicator();
    let support = ast.support(dim);
    // growing or flat kernels simply carry no certificate; they parse fine
    // and are turned away later by the integrand checks
    let decay = if support.is_some() {
        None
    } else {
        fit_decay(&ast, dim)
    };
    let eval = move |x: &[f64]| ast.eval(x);
    let kernel = Kernel::from_fn(dim, eval, support, decay).with_continuity(continuous);
    if !kernel.decay_certificate_holds() {
        return Err(Error::IntegrandRejected(
            "fitted decay certificate failed its spot check".into(),
        ));
    }
    Ok(kernel)
}

/// Probes |f| at log-spaced radii along axis and diagonal directions and
/// fits either a power envelope or an exponential one, whichever explains
/// the samples; constants carry a safety factor.
fn fit_decay(ast: &Expr, dim: usize) -> Option<Decay> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for axis in 0..dim {
        for sign in [-1.0, 1.0] {
            let mut e = vec![0.0; dim];
            e[axis] = sign;
            dirs.push(e);
        }
    }
    if dim > 1 {
        let norm = (dim as f64).sqrt();
        dirs.push(vec![1.0 / norm; dim]);
        dirs.push(vec![-1.0 / norm; dim]);
    }
    let radii: Vec<f64> = (2..22).map(|j| 2.0_f64.powi(j)).collect();
    let maxima: Vec<f64> = radii
        .iter()
        .map(|&r| {
            dirs.iter()
                .map(|d| {
                    let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                    ast.eval(&x).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    if maxima.iter().all(|&m| m == 0.0) {
        // numerically vanishing: treat as an extreme power envelope
        return Some(Decay::Power { c: 1e-30, eta: 64.0, radius: radii[0] });
    }
    // least-squares slopes of log m against log r (power) and r (exponential)
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&maxima)
        .filter(|(_, &m)| m > 1e-290)
        .map(|(&r, &m)| (r, m.ln()))
        .collect();
    if pts.len() < 4 {
        // drops below the floor almost immediately: super-polynomial decay
        let c = maxima.iter().cloned().fold(0.0, f64::max).max(1e-30) * 2.0;
        return Some(Decay::Exponential { c: c * 1e6, rate: 1.0, radius: radii[0] });
    }
    let slope = |xs: &[f64], ys: &[f64]| -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        cov / var
    };
    let residual = |xs: &[f64], ys: &[f64], b: f64| -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = (y - my) - b * (x - mx);
                e * e
            })
            .sum()
    };
    let logs_r: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let lin_r: Vec<f64> = pts.iter().map(|(r, _)| *r).collect();
    let log_m: Vec<f64> = pts.iter().map(|(_, lm)| *lm).collect();
    let pow_slope = slope(&logs_r, &log_m);
    let exp_slope = slope(&lin_r, &log_m);
    let pow_res = residual(&logs_r, &log_m, pow_slope);
    let exp_res = residual(&lin_r, &log_m, exp_slope);
    if exp_slope < 0.0 && exp_res < pow_res {
        let rate = -exp_slope * 0.9;
        let c = pts
            .iter()
            .map(|(r, lm)| (lm + rate * r).exp())
            .fold(0.0, f64::max)
            * 2.0;
        return Some(Decay::Exponential { c, rate, radius: pts[0].0 });
    }
    if pow_slope < -1e-3 {
        let eta = -pow_slope * 0.95;
        let c = pts
            .iter()
            .map(|(r, lm)| (lm + eta * r.ln()).exp())
            .fold(0.0, f64::max)
            * 2.0;
        return Some(Decay::Power { c, eta, radius: pts[0].0 });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_integrand, IntegrandClass};
    use approx::assert_relative_eq;

    #[test]
    fn indicator_expression() {
        let k = parse_kernel("indicator(box(0,1))", 1).unwrap();
        assert_eq!(k.eval(&[0.5]), 1.0);
        assert_eq!(k.eval(&[1.0]), 0.0);
        assert!(!k.is_continuous());
        // exact integration path is preserved
        assert_relative_eq!(k.alpha_norm(1.0, 1e-9).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn arithmetic_precedence_and_unary_minus() {
        let k = parse_kernel("1 + 2 * x - -x", 1).unwrap();
        assert_relative_eq!(k.eval(&[3.0]), 1.0 + 6.0 + 3.0, epsilon = 1e-14);
        let k = parse_kernel("(1 + x) * (2 - x) / 2", 1).unwrap();
        assert_relative_eq!(k.eval(&[1.0]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn exponential_kernel_gets_exponential_certificate() {
        let k = parse_kernel("exp(-abs(x))", 1).unwrap();
        assert!(matches!(k.decay(), Some(Decay::Exponential { .. })));
        assert!(k.decay_certificate_holds());
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            assert!(check_integrand(&k, alpha).is_admissible());
        }
    }

    #[test]
    fn gaussian_string_kernel() {
        let k = parse_kernel("exp(-x*x)", 1).unwrap();
        assert_relative_eq!(k.eval(&[0.5]), (-0.25_f64).exp(), epsilon = 1e-14);
        // sqrt(pi/2) for the 2-norm mass of exp(-x^2) at alpha = 2
        assert_relative_eq!(
            k.alpha_norm_mass(2.0, 1e-10).unwrap().value,
            (std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-7
        );
    }

    #[test]
    fn moving_average_kernel_power_tail() {
        let k = parse_kernel("pow(max(x,0),0.25) - pow(max(x-1,0),0.25)", 1).unwrap();
        // tail ~ x^-0.75: the fitted exponent must certify integrability of
        // the 1.5-power in dimension 1
        let Some(Decay::Power { eta, .. }) = k.decay() else {
            panic!("expected a power certificate, got {:?}", k.decay());
        };
        assert!((eta - 0.75).abs() < 0.05, "fitted eta {eta}");
        assert_eq!(check_integrand(&k, 1.5), IntegrandClass::LAlpha);
        // frozen from an independent high-precision integration
        let mass = k.alpha_norm_mass(1.5, 1e-6).unwrap();
        assert!(
            (mass.value - 1.8545023832502).abs() < 2e-3 + mass.tail_bound,
            "mass {mass:?}"
        );
    }

    #[test]
    fn product_with_indicator_is_bounded() {
        let k = parse_kernel("exp(-x*x) * indicator(box(-2,2))", 1).unwrap();
        let b = k.support().expect("structural support");
        assert_eq!((b.lo[0], b.hi[0]), (-2.0, 2.0));
        assert!(!k.is_continuous());
    }

    #[test]
    fn multi_dim_coordinates() {
        let k = parse_kernel("x * y * indicator(box(0,1), box(0,2))", 2).unwrap();
        assert_relative_eq!(k.eval(&[0.5, 1.5]), 0.75, epsilon = 1e-14);
        assert_eq!(k.eval(&[0.5, 2.5]), 0.0);
        let k2 = parse_kernel("x1 + x2", 2).unwrap();
        assert_relative_eq!(k2.eval(&[1.0, 2.0]), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_kernel("1 + ) * 2", 1).unwrap_err();
        match e {
            Error::Parse { pos, .. } => assert_eq!(pos, 4),
            other => panic!("expected parse error, got {other}"),
        }
        assert!(parse_kernel("y", 1).is_err());
        assert!(parse_kernel("x3", 2).is_err());
        assert!(parse_kernel("frob(x)", 1).is_err());
        assert!(parse_kernel("indicator(box(0,1), box(0,1))", 1).is_err());
        assert!(parse_kernel("1 + 2 trailing", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let k = parse_kernel("1.5e-2 * indicator(box(0,1))", 1).unwrap();
        assert_relative_eq!(k.eval(&[0.5]), 0.015, epsilon = 1e-14);
    }
}
