//! Parser for weight literals: two comma-separated arithmetic expressions
//! over numbers, `lambda` (resolved per family member) and the imaginary
//! unit `i`, with `+ - * /` and parentheses.

use num_complex::Complex64;

pub fn parse_weights(input: &str, lambda: f64) -> Result<(Complex64, Complex64), String> {
    let parts = split_top_level(input)?;
    let u0 = parse_expr_str(parts.0, lambda)?;
    let u1 = parse_expr_str(parts.1, lambda)?;
    for (name, u) in [("u0", u0), ("u1", u1)] {
        if !u.re.is_finite() || !u.im.is_finite() {
            return Err(format!("weight {name} is not finite: {u}"));
        }
    }
    Ok((u0, u1))
}

fn split_top_level(input: &str) -> Result<(&str, &str), String> {
    let mut depth = 0usize;
    for (pos, c) in input.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| "unbalanced parentheses".to_string())?
            }
            ',' if depth == 0 => {
                return Ok((&input[..pos], &input[pos + 1..]));
            }
            _ => {}
        }
    }
    Err("expected two comma-separated weights, e.g. \"1-lambda,1\"".into())
}

fn parse_expr_str(s: &str, lambda: f64) -> Result<Complex64, String> {
    let mut p = Parser {
        tokens: tokenize(s)?,
        pos: 0,
        lambda,
    };
    let v = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(format!("trailing input in weight expression {s:?}"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Lambda,
    Imag,
    Plus,
    Minus,
    Star,
    Slash,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut k = 0usize;
    while k < bytes.len() {
        let c = bytes[k] as char;
        match c {
            ' ' | '\t' => k += 1,
            '+' => {
                out.push(Token::Plus);
                k += 1;
            }
            '-' => {
                out.push(Token::Minus);
                k += 1;
            }
            '*' => {
                out.push(Token::Star);
                k += 1;
            }
            '/' => {
                out.push(Token::Slash);
                k += 1;
            }
            '(' => {
                out.push(Token::Open);
                k += 1;
            }
            ')' => {
                out.push(Token::Close);
                k += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = k;
                while k < bytes.len() {
                    let d = bytes[k] as char;
                    if d.is_ascii_digit() || d == '.' {
                        k += 1;
                    } else if (d == 'e' || d == 'E')
                        && k + 1 < bytes.len()
                        && ((bytes[k + 1] as char).is_ascii_digit()
                            || bytes[k + 1] == b'+'
                            || bytes[k + 1] == b'-')
                    {
                        k += 2;
                    } else {
                        break;
                    }
                }
                let text = &s[start..k];
                let v: f64 = text
                    .parse()
                    .map_err(|_| format!("bad number literal {text:?}"))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = k;
                while k < bytes.len() && (bytes[k] as char).is_ascii_alphanumeric() {
                    k += 1;
                }
                match &s[start..k] {
                    "lambda" => out.push(Token::Lambda),
                    "i" | "I" => out.push(Token::Imag),
                    other => return Err(format!("unknown symbol {other:?} in weight")),
                }
            }
            other => return Err(format!("unexpected character {other:?} in weight")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    lambda: f64,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Complex64, String> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Plus => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Token::Minus => {
                    self.pos += 1;
                    acc -= self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Complex64, String> {
        let mut acc = self.factor()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Star => {
                    self.pos += 1;
                    acc *= self.factor()?;
                }
                Token::Slash => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    if rhs.norm_sqr() == 0.0 {
                        return Err("division by zero in weight".into());
                    }
                    acc /= rhs;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Complex64, String> {
        match self.peek().cloned() {
            Some(Token::Plus) => {
                self.pos += 1;
                self.factor()
            }
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Complex64::new(v, 0.0))
            }
            Some(Token::Lambda) => {
                self.pos += 1;
                Ok(Complex64::new(self.lambda, 0.0))
            }
            Some(Token::Imag) => {
                self.pos += 1;
                Ok(Complex64::new(0.0, 1.0))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let v = self.expr()?;
                match self.peek() {
                    Some(Token::Close) => {
                        self.pos += 1;
                        Ok(v)
                    }
                    _ => Err("missing closing parenthesis".into()),
                }
            }
            other => Err(format!("unexpected token {other:?} in weight")),
        }
    }
}
