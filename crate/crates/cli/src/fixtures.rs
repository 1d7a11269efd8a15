//! Bundled problem files, embedded so `fixtures/<name>.prob` resolves even
//! when the binary runs outside the repository.

pub const FIXTURES: &[(&str, &str)] = &[
    ("example1", include_str!("../fixtures/example1.prob")),
    ("example2", include_str!("../fixtures/example2.prob")),
    ("fa", include_str!("../fixtures/fa.prob")),
    ("cubic", include_str!("../fixtures/cubic.prob")),
    ("twowell", include_str!("../fixtures/twowell.prob")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    let stem = name
        .trim_start_matches("fixtures/")
        .trim_end_matches(".prob");
    FIXTURES
        .iter()
        .find(|(n, _)| *n == stem)
        .map(|(_, text)| *text)
}
