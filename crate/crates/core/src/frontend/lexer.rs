use super::ast::Span;
use super::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(i64),
    // keywords
    Var,
    Function,
    Returns,
    Axiom,
    Procedure,
    Requires,
    Ensures,
    Modifies,
    Assert,
    Assume,
    Havoc,
    Call,
    If,
    Else,
    While,
    Invariant,
    Forall,
    Exists,
    True,
    False,
    Int,
    Bool,
    Array,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    Assign,
    EqEq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    Implies,
    Iff,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Var => "var",
            Tok::Function => "function",
            Tok::Returns => "returns",
            Tok::Axiom => "axiom",
            Tok::Procedure => "procedure",
            Tok::Requires => "requires",
            Tok::Ensures => "ensures",
            Tok::Modifies => "modifies",
            Tok::Assert => "assert",
            Tok::Assume => "assume",
            Tok::Havoc => "havoc",
            Tok::Call => "call",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Invariant => "invariant",
            Tok::Forall => "forall",
            Tok::Exists => "exists",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Int => "int",
            Tok::Bool => "bool",
            Tok::Array => "array",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::ColonColon => "::",
            Tok::Assign => ":=",
            Tok::EqEq => "==",
            Tok::Neq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Implies => "==>",
            Tok::Iff => "<==>",
            Tok::Ident(_) | Tok::Num(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "var" => Tok::Var,
        "function" => Tok::Function,
        "returns" => Tok::Returns,
        "axiom" => Tok::Axiom,
        "procedure" => Tok::Procedure,
        "requires" => Tok::Requires,
        "ensures" => Tok::Ensures,
        "modifies" => Tok::Modifies,
        "assert" => Tok::Assert,
        "assume" => Tok::Assume,
        "havoc" => Tok::Havoc,
        "call" => Tok::Call,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "invariant" => Tok::Invariant,
        "forall" => Tok::Forall,
        "exists" => Tok::Exists,
        "true" => Tok::True,
        "false" => Tok::False,
        "int" => Tok::Int,
        "bool" => Tok::Bool,
        "array" => Tok::Array,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '.' | '\'')
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
        if chars[*i].1 == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };

    while i < chars.len() {
        let (start, c) = chars[i];
        let (tline, tcol) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        let peek = chars.get(i + 1).map(|&(_, c)| c);
        if c == '/' && peek == Some('/') {
            while i < chars.len() && chars[i].1 != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && peek == Some('*') {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(
                        ParseErrorKind::Lexical,
                        "unterminated block comment",
                        tline,
                        tcol,
                    ));
                }
                if chars[i].1 == '*' && chars.get(i + 1).map(|&(_, c)| c) == Some('/') {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }

        let tok = if ident_start(c) {
            let mut word = String::new();
            while i < chars.len() && ident_continue(chars[i].1) {
                word.push(chars[i].1);
                advance(&mut i, &mut line, &mut col);
            }
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                digits.push(chars[i].1);
                advance(&mut i, &mut line, &mut col);
            }
            match digits.parse::<i64>() {
                Ok(n) => Tok::Num(n),
                Err(_) => {
                    return Err(ParseError::new(
                        ParseErrorKind::Lexical,
                        format!("integer literal `{digits}` is out of range"),
                        tline,
                        tcol,
                    ))
                }
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 4)].iter().map(|&(_, c)| c).collect();
            let (tok, len) = if rest.starts_with("<==>") {
                (Tok::Iff, 4)
            } else if rest.starts_with("==>") {
                (Tok::Implies, 3)
            } else if rest.starts_with("::") {
                (Tok::ColonColon, 2)
            } else if rest.starts_with(":=") {
                (Tok::Assign, 2)
            } else if rest.starts_with("==") {
                (Tok::EqEq, 2)
            } else if rest.starts_with("!=") {
                (Tok::Neq, 2)
            } else if rest.starts_with("<=") {
                (Tok::Le, 2)
            } else if rest.starts_with(">=") {
                (Tok::Ge, 2)
            } else if rest.starts_with("&&") {
                (Tok::AndAnd, 2)
            } else if rest.starts_with("||") {
                (Tok::OrOr, 2)
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    // a lone `=` is accepted as equality
                    '=' => Tok::EqEq,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '%' => Tok::Percent,
                    '!' => Tok::Bang,
                    other => {
                        return Err(ParseError::new(
                            ParseErrorKind::Lexical,
                            format!("unexpected character `{other}`"),
                            tline,
                            tcol,
                        ))
                    }
                };
                (t, 1)
            };
            for _ in 0..len {
                advance(&mut i, &mut line, &mut col);
            }
            tok
        };
        let end = chars.get(i).map(|&(b, _)| b).unwrap_or(src.len());
        out.push((tok, Span::new(start, end, tline, tcol)));
    }
    out.push((Tok::Eof, Span::new(src.len(), src.len(), line, col)));
    Ok(out)
}
