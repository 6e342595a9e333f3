//! Feature templates for the transition classifier.

use super::system::ParserState;

/// Bumped whenever the templates change; models record it.
pub const FEATURE_VERSION: u32 = 1;

const ROOT: &str = "<root>";
const NONE: &str = "<none>";

/// Forms and tags of the sentence being parsed, position 0 is the root.
pub(crate) struct SentenceView<'a> {
    forms: Vec<&'a str>,
    tags: Vec<&'a str>,
}

impl<'a> SentenceView<'a> {
    pub(crate) fn new<I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut forms = vec![ROOT];
        let mut tags = vec![ROOT];
        for (form, tag) in tokens {
            forms.push(form);
            tags.push(tag);
        }
        SentenceView { forms, tags }
    }

    fn form(&self, position: Option<usize>) -> &str {
        position.map_or(NONE, |p| self.forms[p])
    }

    fn tag(&self, position: Option<usize>) -> &str {
        position.map_or(NONE, |p| self.tags[p])
    }
}

fn distance_bucket(state: &ParserState) -> &'static str {
    match (state.stack_at(0), state.buffer_at(0)) {
        (Some(s), Some(b)) => match b - s {
            1 => "1",
            2 => "2",
            3 => "3",
            4 => "4",
            5..=9 => "5-9",
            _ => "10+",
        },
        _ => NONE,
    }
}

/// Feature strings for `state`. The order is fixed.
pub(crate) fn extract(state: &ParserState, view: &SentenceView) -> Vec<String> {
    let s0 = state.stack_at(0);
    let s1 = state.stack_at(1);
    let b0 = state.buffer_at(0);
    let b1 = state.buffer_at(1);

    let label = |p: Option<usize>| p.and_then(|p| state.label(p)).unwrap_or(NONE);
    let s0l = label(s0.and_then(|p| state.leftmost_child(p)));
    let s0r = label(s0.and_then(|p| state.rightmost_child(p)));
    let b0l = label(b0.and_then(|p| state.leftmost_child(p)));
    let s0_attached = s0.map_or(NONE, |p| if state.head(p).is_some() { "y" } else { "n" });

    let (s0w, s0p) = (view.form(s0), view.tag(s0));
    let (b0w, b0p) = (view.form(b0), view.tag(b0));
    let (b1w, b1p) = (view.form(b1), view.tag(b1));
    let s1p = view.tag(s1);
    let dist = distance_bucket(state);

    vec![
        "bias".to_owned(),
        format!("s0w={}", s0w),
        format!("s0p={}", s0p),
        format!("s0wp={}/{}", s0w, s0p),
        format!("b0w={}", b0w),
        format!("b0p={}", b0p),
        format!("b0wp={}/{}", b0w, b0p),
        format!("b1w={}", b1w),
        format!("b1p={}", b1p),
        format!("s0p.b0p={}/{}", s0p, b0p),
        format!("s0w.b0w={}/{}", s0w, b0w),
        format!("s0w.b0p={}/{}", s0w, b0p),
        format!("s0p.b0w={}/{}", s0p, b0w),
        format!("s0p.b0p.b1p={}/{}/{}", s0p, b0p, b1p),
        format!("s1p.s0p.b0p={}/{}/{}", s1p, s0p, b0p),
        format!("s0l={}", s0l),
        format!("s0r={}", s0r),
        format!("b0l={}", b0l),
        format!("s0p.s0l.s0r={}/{}/{}", s0p, s0l, s0r),
        format!("b0p.b0l={}/{}", b0p, b0l),
        format!("s0h={}", s0_attached),
        format!("s0h.s0p.b0p={}/{}/{}", s0_attached, s0p, b0p),
        format!("dist={}", dist),
        format!("dist.s0p.b0p={}/{}/{}", dist, s0p, b0p),
    ]
}
