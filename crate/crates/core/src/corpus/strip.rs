//! Token-aware comment removal.
//!
//! A single-pass modal lexer walks the source in one of the states
//! code / line comment / block comment / string / template / regex. Comment
//! delimiters inside string, template and regular-expression literals are
//! left alone. Whether a `/` starts a regular expression or a division is
//! decided from the previous significant token.

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StripOutput {
    pub text: String,
    pub warnings: Vec<String>,
}

/// Removes `//` and `/* */` comments from ECMAScript source.
///
/// Lines that consist only of a comment are dropped, trailing whitespace in
/// front of an end-of-line comment is trimmed, and a block comment spanning
/// several lines is replaced by a single line break so automatic semicolon
/// insertion sees the same line structure.
pub fn strip_comments(text: &str) -> String {
    strip_comments_with_warnings(text).text
}

pub fn strip_comments_with_warnings(text: &str) -> StripOutput {
    let mut lx = Lexer::new(text);
    lx.run();
    StripOutput {
        text: lx.out,
        warnings: lx.warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sig {
    /// Start of input, or an operator/punctuator after which an expression
    /// may begin.
    ExprStart,
    /// A value-like token (identifier, literal, closing paren/bracket).
    Value,
}

#[derive(Debug, Clone, Copy)]
enum Frame {
    Template,
    Interpolation { depth: usize },
}

const REGEX_KEYWORDS: &[&str] = &[
    "return",
    "typeof",
    "instanceof",
    "in",
    "of",
    "new",
    "delete",
    "void",
    "throw",
    "case",
    "do",
    "else",
    "yield",
    "await",
];

fn is_line_terminator(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$' || (!c.is_ascii() && !c.is_whitespace())
}

fn is_operator_char(c: char) -> bool {
    matches!(
        c,
        '+' | '-' | '*' | '/' | '%' | '<' | '>' | '=' | '!' | '&' | '|' | '^'
    )
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    out: String,
    warnings: Vec<String>,
    stack: Vec<Frame>,
    sig: Sig,
    last_punct: [char; 2],
    line_start: usize,
    line_had_comment: bool,
    last_comment_end: Option<usize>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            out: String::with_capacity(src.len()),
            warnings: Vec::new(),
            stack: Vec::new(),
            sig: Sig::ExprStart,
            last_punct: [' ', ' '],
            line_start: 0,
            line_had_comment: false,
            last_comment_end: None,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn byte_pos(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(b, _)| b)
            .unwrap_or(self.src.len())
    }

    fn in_template_text(&self) -> bool {
        matches!(self.stack.last(), Some(Frame::Template))
    }

    fn run(&mut self) {
        while let Some(c) = self.peek(0) {
            if self.in_template_text() {
                self.template_char(c);
            } else {
                self.code_char(c);
            }
        }
        self.finish_line();
    }

    /// Copies one raw character (used inside literals).
    fn copy(&mut self, c: char) {
        self.out.push(c);
        self.pos += 1;
        if c == '\n' || c == '\u{2028}' || c == '\u{2029}' {
            self.line_start = self.out.len();
            self.line_had_comment = false;
            self.last_comment_end = None;
        }
    }

    /// Ends the current output line. When the line was touched by comment
    /// removal its trailing blanks are trimmed, and if nothing but blanks is
    /// left the line is dropped (the terminator is not emitted).
    /// Returns whether the line was kept.
    fn finish_line(&mut self) -> bool {
        if !self.line_had_comment {
            return true;
        }
        if let Some(end) = self.last_comment_end {
            if self.out[end..].chars().all(|c| c == ' ' || c == '\t') {
                let trimmed = self.out[self.line_start..]
                    .trim_end_matches([' ', '\t'])
                    .len();
                self.out.truncate(self.line_start + trimmed);
            }
        }
        if self.out[self.line_start..]
            .chars()
            .all(|c| c == ' ' || c == '\t')
        {
            self.out.truncate(self.line_start);
            return false;
        }
        true
    }

    fn code_newline(&mut self, terminator: &str) {
        if self.finish_line() {
            self.out.push_str(terminator);
        }
        self.line_start = self.out.len();
        self.line_had_comment = false;
        self.last_comment_end = None;
    }

    fn mark_comment(&mut self) {
        self.line_had_comment = true;
        self.last_comment_end = Some(self.out.len());
    }

    fn code_char(&mut self, c: char) {
        match c {
            '\r' => {
                if self.peek(1) == Some('\n') {
                    self.pos += 2;
                    self.code_newline("\r\n");
                } else {
                    self.pos += 1;
                    self.code_newline("\r");
                }
            }
            '\n' | '\u{2028}' | '\u{2029}' => {
                self.pos += 1;
                let mut buf = [0u8; 4];
                self.code_newline(c.encode_utf8(&mut buf));
            }
            c if c.is_whitespace() => {
                self.out.push(c);
                self.pos += 1;
            }
            '/' if self.peek(1) == Some('/') => self.line_comment(),
            '/' if self.peek(1) == Some('*') => self.block_comment(),
            '/' if self.sig == Sig::ExprStart && !self.after_increment() => self.regex(),
            '\'' | '"' => self.string(c),
            '`' => {
                self.out.push('`');
                self.pos += 1;
                self.stack.push(Frame::Template);
            }
            '{' => {
                if let Some(Frame::Interpolation { depth }) = self.stack.last_mut() {
                    *depth += 1;
                }
                self.punct(c, Sig::ExprStart);
            }
            '}' => {
                match self.stack.last_mut() {
                    Some(Frame::Interpolation { depth }) if *depth == 0 => {
                        self.stack.pop();
                        self.out.push('}');
                        self.pos += 1;
                        return;
                    }
                    Some(Frame::Interpolation { depth }) => *depth -= 1,
                    _ => {}
                }
                self.punct(c, Sig::ExprStart);
            }
            ')' | ']' => self.punct(c, Sig::Value),
            c if is_word_char(c) => self.word(),
            c => self.punct(c, Sig::ExprStart),
        }
    }

    fn after_increment(&self) -> bool {
        matches!(self.last_punct, ['+', '+'] | ['-', '-'])
    }

    fn punct(&mut self, c: char, sig: Sig) {
        self.out.push(c);
        self.pos += 1;
        self.sig = sig;
        self.last_punct = [self.last_punct[1], c];
    }

    fn word(&mut self) {
        let start = self.pos;
        while let Some(c) = self.peek(0) {
            if !is_word_char(c) {
                break;
            }
            self.out.push(c);
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos]
            .iter()
            .map(|&(_, c)| c)
            .collect();
        self.sig = if REGEX_KEYWORDS.contains(&word.as_str()) {
            Sig::ExprStart
        } else {
            Sig::Value
        };
        self.last_punct = [' ', ' '];
    }

    fn line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if is_line_terminator(c) {
                break;
            }
            self.pos += 1;
        }
        self.mark_comment();
    }

    fn block_comment(&mut self) {
        let start_byte = self.byte_pos();
        self.pos += 2;
        let mut spans_lines = false;
        let mut terminated = false;
        while let Some(c) = self.peek(0) {
            if c == '*' && self.peek(1) == Some('/') {
                self.pos += 2;
                terminated = true;
                break;
            }
            if is_line_terminator(c) {
                spans_lines = true;
            }
            self.pos += 1;
        }
        if !terminated {
            self.warnings.push(format!(
                "unterminated block comment starting at byte {start_byte}"
            ));
        }
        if !terminated {
            self.mark_comment();
            self.finish_line();
            self.line_had_comment = false;
            self.last_comment_end = None;
            return;
        }
        if spans_lines {
            self.mark_comment();
            self.code_newline("\n");
            self.mark_comment();
            return;
        }
        // Keep adjacent tokens from fusing once the comment is gone.
        if let (Some(prev), Some(next)) = (self.out.chars().next_back(), self.peek(0)) {
            let fuse = (is_word_char(prev) && is_word_char(next))
                || (is_operator_char(prev) && is_operator_char(next));
            if fuse {
                self.out.push(' ');
            }
        }
        self.mark_comment();
    }

    fn string(&mut self, quote: char) {
        self.copy(quote);
        while let Some(c) = self.peek(0) {
            match c {
                '\\' => {
                    self.copy(c);
                    if let Some(next) = self.peek(0) {
                        if next == '\r' && self.peek(1) == Some('\n') {
                            self.copy('\r');
                        }
                        self.copy(next);
                    }
                }
                c if c == quote => {
                    self.copy(c);
                    break;
                }
                c if is_line_terminator(c) => break,
                c => self.copy(c),
            }
        }
        self.sig = Sig::Value;
        self.last_punct = [' ', ' '];
    }

    fn regex(&mut self) {
        self.copy('/');
        let mut in_class = false;
        while let Some(c) = self.peek(0) {
            match c {
                '\\' => {
                    self.copy(c);
                    match self.peek(0) {
                        Some(n) if !is_line_terminator(n) => self.copy(n),
                        _ => {}
                    }
                }
                '[' => {
                    in_class = true;
                    self.copy(c);
                }
                ']' => {
                    in_class = false;
                    self.copy(c);
                }
                '/' if !in_class => {
                    self.copy(c);
                    while let Some(f) = self.peek(0) {
                        if !is_word_char(f) {
                            break;
                        }
                        self.copy(f);
                    }
                    break;
                }
                c if is_line_terminator(c) => break,
                c => self.copy(c),
            }
        }
        self.sig = Sig::Value;
        self.last_punct = [' ', ' '];
    }

    fn template_char(&mut self, c: char) {
        match c {
            '\\' => {
                self.copy(c);
                if let Some(n) = self.peek(0) {
                    self.copy(n);
                }
            }
            '`' => {
                self.copy(c);
                self.stack.pop();
                self.sig = Sig::Value;
                self.last_punct = [' ', ' '];
            }
            '$' if self.peek(1) == Some('{') => {
                self.copy('$');
                self.copy('{');
                self.stack.push(Frame::Interpolation { depth: 0 });
                self.sig = Sig::ExprStart;
            }
            c => self.copy(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_comment_after_code() {
        assert_eq!(strip_comments("var a = 1; // note"), "var a = 1;");
    }

    #[test]
    fn delimiter_inside_string_is_kept() {
        let src = r#"var s = "a // b";"#;
        assert_eq!(strip_comments(src), src);
        let src = "var s = 'a /* b */ c';";
        assert_eq!(strip_comments(src), src);
    }

    #[test]
    fn leading_and_trailing_block_comments() {
        assert_eq!(strip_comments("/* x */var a;/* y */"), "var a;");
    }

    #[test]
    fn comment_only_lines_are_dropped() {
        let src = "var a = 1;\n// header\n  // indented\nvar b = 2;\n";
        assert_eq!(strip_comments(src), "var a = 1;\nvar b = 2;\n");
    }

    #[test]
    fn multiline_block_comment_keeps_a_line_break() {
        let src = "a = 1 /* one\ntwo */ b = 2";
        assert_eq!(strip_comments(src), "a = 1\n b = 2");
        let src = "foo();\n/*\n * doc\n */\nbar();\n";
        assert_eq!(strip_comments(src), "foo();\nbar();\n");
    }

    #[test]
    fn inline_block_comment_does_not_fuse_tokens() {
        assert_eq!(strip_comments("var/**/a = 1;"), "var a = 1;");
        assert_eq!(strip_comments("f(/* arg */x);"), "f(x);");
        assert_eq!(strip_comments("a = b -/**/-c;"), "a = b - -c;");
    }

    #[test]
    fn regex_literals_keep_slashes() {
        let src = "var re = /\\/\\/ not a comment/g; x = s.replace(/[/*]/, '');";
        assert_eq!(strip_comments(src), src);
        let src = "if (ok) return /https?:\\/\\//.test(url);";
        assert_eq!(strip_comments(src), src);
    }

    #[test]
    fn division_is_not_a_regex() {
        let src = "var r = a / b; // ratio\nvar q = (c) / 2 / d;";
        assert_eq!(strip_comments(src), "var r = a / b;\nvar q = (c) / 2 / d;");
        assert_eq!(strip_comments("i++ / 2 // x"), "i++ / 2");
    }

    #[test]
    fn template_literals_and_interpolation() {
        let src = "var t = `url // ${a /* c */ + b} /* kept */`; // gone";
        assert_eq!(
            strip_comments(src),
            "var t = `url // ${a  + b} /* kept */`;"
        );
        let src = "var t = `${ {a: 1}.a }//x`;";
        assert_eq!(strip_comments(src), src);
        let src = "var t = `outer ${`inner // ${x}`} tail`;";
        assert_eq!(strip_comments(src), src);
    }

    #[test]
    fn unterminated_block_comment_warns() {
        let out = strip_comments_with_warnings("var a = 1; /* never closed\nvar b;");
        assert_eq!(out.text, "var a = 1;");
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn crlf_line_endings() {
        let src = "var a = 1; // c\r\n// only\r\nvar b;\r\n";
        assert_eq!(strip_comments(src), "var a = 1;\r\nvar b;\r\n");
    }

    #[test]
    fn empty_and_comment_free_input() {
        assert_eq!(strip_comments(""), "");
        let src = "var a = 1;\n\n\nvar b = 2;\n";
        assert_eq!(strip_comments(src), src);
    }

    #[test]
    fn url_in_string_survives() {
        let src = "var u = 'https://earthengine.google.com'; // link";
        assert_eq!(
            strip_comments(src),
            "var u = 'https://earthengine.google.com';"
        );
    }
}
