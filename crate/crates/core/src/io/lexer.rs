use std::fmt;

use super::ProblemError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Prime,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Comma,
    /// End of statement: `;` or a newline outside parentheses.
    Sep,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Prime => f.write_str("`'`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Sep => f.write_str("end of statement"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// A newline continues the statement after a binary operator or inside
/// parentheses.
fn continues(prev: Option<&Tok>) -> bool {
    matches!(
        prev,
        None | Some(
            Tok::Plus
                | Tok::Minus
                | Tok::Star
                | Tok::Slash
                | Tok::Caret
                | Tok::Eq
                | Tok::Comma
                | Tok::LParen
                | Tok::LBrace
                | Tok::Sep
        )
    )
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ProblemError> {
    let mut out: Vec<Token> = Vec::new();
    let mut depth = 0usize;
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok: Tok| {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            })
        };
        match c {
            '\n' => {
                if depth == 0 && !continues(out.last().map(|t| &t.tok)) {
                    push(&mut out, Tok::Sep);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => {
                if !matches!(
                    out.last().map(|t| &t.tok),
                    None | Some(Tok::Sep | Tok::LBrace)
                ) {
                    push(&mut out, Tok::Sep);
                }
            }
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            '*' => push(&mut out, Tok::Star),
            '/' => push(&mut out, Tok::Slash),
            '^' => push(&mut out, Tok::Caret),
            '\'' => push(&mut out, Tok::Prime),
            '=' => push(&mut out, Tok::Eq),
            ',' => push(&mut out, Tok::Comma),
            '{' => push(&mut out, Tok::LBrace),
            '}' => {
                if !matches!(
                    out.last().map(|t| &t.tok),
                    None | Some(Tok::Sep | Tok::LBrace)
                ) {
                    push(&mut out, Tok::Sep);
                }
                push(&mut out, Tok::RBrace)
            }
            '(' => {
                depth += 1;
                push(&mut out, Tok::LParen)
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(|| ProblemError::Syntax {
                    line,
                    col,
                    message: "unmatched `)`".into(),
                })?;
                push(&mut out, Tok::RParen)
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && s.ends_with(['e', 'E']);
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        s.push(d);
                        i += 1;
                        col += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Number(s));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                push(&mut out, Tok::Ident(s));
                continue;
            }
            other => {
                return Err(ProblemError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    if depth > 0 {
        return Err(ProblemError::Syntax {
            line,
            col,
            message: "unclosed `(`".into(),
        });
    }
    if !matches!(out.last().map(|t| &t.tok), None | Some(Tok::Sep)) {
        out.push(Token {
            tok: Tok::Sep,
            line,
            col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
