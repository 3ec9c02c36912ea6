//! Prompt templates with `{name}` placeholders and `{{`/`}}` escapes.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub text: &'static str,
}

pub const ROUTER: Template = Template {
    name: "router",
    text: include_str!("../../templates/router.txt"),
};

pub const POLICY: Template = Template {
    name: "policy",
    text: include_str!("../../templates/policy.txt"),
};

pub const REFINER: Template = Template {
    name: "refiner",
    text: include_str!("../../templates/refiner.txt"),
};

/// Used verbatim as a system prompt; its braces are literal JSON.
pub const ATOMIZER: Template = Template {
    name: "atomizer",
    text: include_str!("../../templates/atomizer.txt"),
};

/// Used verbatim as a system prompt.
pub const VALIDATOR: Template = Template {
    name: "validator",
    text: include_str!("../../templates/validator.txt"),
};

pub const REVISER: Template = Template {
    name: "reviser",
    text: include_str!("../../templates/reviser.txt"),
};

enum Piece<'a> {
    Literal(String),
    Placeholder(&'a str),
}

fn parse(text: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("{{") {
            literal.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            literal.push('}');
            rest = &rest[2..];
        } else if c == '{' {
            let close = rest.find('}').unwrap_or_else(|| panic!("unclosed placeholder in template"));
            if !literal.is_empty() {
                pieces.push(Piece::Literal(std::mem::take(&mut literal)));
            }
            pieces.push(Piece::Placeholder(&rest[1..close]));
            rest = &rest[close + 1..];
        } else {
            literal.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    if !literal.is_empty() {
        pieces.push(Piece::Literal(literal));
    }
    pieces
}

impl Template {
    /// The template without the resource file's final newline.
    pub fn body(&self) -> &'static str {
        self.text.strip_suffix('\n').unwrap_or(self.text)
    }

    /// Substitutes every placeholder; values are inserted as-is.
    ///
    /// Panics if the template names a placeholder missing from `values`.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.text.len());
        for piece in parse(self.body()) {
            match piece {
                Piece::Literal(s) => out.push_str(&s),
                Piece::Placeholder(name) => {
                    let value = values
                        .iter()
                        .find(|(k, _)| *k == name)
                        .unwrap_or_else(|| panic!("template {} has no value for {{{name}}}", self.name));
                    out.push_str(value.1);
                }
            }
        }
        out
    }

    pub fn placeholders(&self) -> Vec<&'static str> {
        parse(self.body())
            .into_iter()
            .filter_map(|p| match p {
                Piece::Placeholder(name) => Some(name),
                Piece::Literal(_) => None,
            })
            .collect()
    }

    /// The unescaped text between placeholders, in order.
    pub fn literal_segments(&self) -> Vec<String> {
        parse(self.body())
            .into_iter()
            .filter_map(|p| match p {
                Piece::Literal(s) => Some(s),
                Piece::Placeholder(_) => None,
            })
            .collect()
    }
}
