use super::{ErrorKind, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    Real(f64),
    Str(String),
    Arrow,
    Sym(char),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Real(v) => format!("`{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Arrow => "`->`".into(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: (usize, usize),
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> (usize, usize) {
        (self.line, self.col)
    }
}

/// Splits `text` into tokens. Bad characters are reported and skipped so
/// parsing can continue.
pub(crate) fn tokenize(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
        } else if c == '/' && text_after_is(&cur, "//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                s.push(c);
                cur.bump();
            }
            tokens.push(Token { tok: Tok::Ident(s), pos });
        } else if c.is_ascii_digit() || (c == '.' && next_is_digit(&cur)) {
            match number(&mut cur) {
                Ok(tok) => tokens.push(Token { tok, pos }),
                Err(msg) => errors.push(ParseError::new(ErrorKind::Lex, pos, msg)),
            }
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                if c == '"' {
                    closed = true;
                    break;
                }
                s.push(c);
            }
            if closed {
                tokens.push(Token { tok: Tok::Str(s), pos });
            } else {
                errors.push(ParseError::new(ErrorKind::Lex, pos, "unterminated string"));
            }
        } else if c == '-' && text_after_is(&cur, "->") {
            cur.bump();
            cur.bump();
            tokens.push(Token { tok: Tok::Arrow, pos });
        } else if ";,()[]{}+-*/=".contains(c) {
            cur.bump();
            tokens.push(Token { tok: Tok::Sym(c), pos });
        } else {
            cur.bump();
            errors.push(ParseError::new(ErrorKind::Lex, pos, format!("unexpected character {c:?}")));
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: cur.pos(),
    });
    (tokens, errors)
}

fn text_after_is(cur: &Cursor<'_>, s: &str) -> bool {
    let mut it = cur.chars.clone();
    s.chars().all(|c| it.next() == Some(c))
}

fn next_is_digit(cur: &Cursor<'_>) -> bool {
    let mut it = cur.chars.clone();
    it.next();
    it.next().is_some_and(|c| c.is_ascii_digit())
}

fn number(cur: &mut Cursor<'_>) -> Result<Tok, String> {
    let mut s = String::new();
    let mut real = false;
    let digits = |cur: &mut Cursor<'_>, s: &mut String| {
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
        }
    };
    digits(cur, &mut s);
    if cur.peek() == Some('.') {
        real = true;
        s.push('.');
        cur.bump();
        digits(cur, &mut s);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        real = true;
        s.push('e');
        cur.bump();
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            s.push(sign);
            cur.bump();
        }
        let before = s.len();
        digits(cur, &mut s);
        if s.len() == before {
            return Err(format!("malformed number `{s}`"));
        }
    }
    // A trailing identifier character (`3q`) is not a number.
    if cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            s.push(c);
            cur.bump();
        }
        return Err(format!("malformed number `{s}`"));
    }
    if real {
        s.parse::<f64>().map(Tok::Real).map_err(|_| format!("malformed number `{s}`"))
    } else {
        s.parse::<u64>()
            .map(Tok::Int)
            .map_err(|_| format!("integer `{s}` is too large"))
    }
}
