//! Query templates for the built-in graphlet patterns, one ASK query per
//! pattern with `{rel1}` / `{rel2}` anchor placeholders.

pub(crate) const TEMPLATES: &[(&str, &str)] = &[
    (
        "fffo",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 ?rel_0 ?e2 .
  ?e2 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "fffc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 ?rel_0 ?e2 .
  ?e2 {rel2} ?e0 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "ffro",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 ?rel_0 ?e2 .
  ?e3 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "ffrc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 ?rel_0 ?e2 .
  ?e0 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "frfo",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 ?rel_0 ?e1 .
  ?e2 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "frfc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 ?rel_0 ?e1 .
  ?e2 {rel2} ?e0 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "frro",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 ?rel_0 ?e1 .
  ?e3 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "frrc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 ?rel_0 ?e1 .
  ?e0 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rffo",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 ?rel_0 ?e2 .
  ?e2 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "rffc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 ?rel_0 ?e2 .
  ?e2 {rel2} ?e0 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rfro",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 ?rel_0 ?e2 .
  ?e3 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "rfrc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 ?rel_0 ?e2 .
  ?e0 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rrfo",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 ?rel_0 ?e1 .
  ?e2 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "rrfc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 ?rel_0 ?e1 .
  ?e2 {rel2} ?e0 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rrro",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 ?rel_0 ?e1 .
  ?e3 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e0 != ?e2 &&
         ?e1 != ?e2 && ?e1 != ?e3 &&
         ?e2 != ?e3 && ?e0 != ?e3)
}",
    ),
    (
        "rrrc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 ?rel_0 ?e1 .
  ?e0 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "ffo",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "ffc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 {rel2} ?e0 .
  FILTER(?e0 != ?e1)
}",
    ),
    (
        "fro",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 {rel2} ?e1 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "frc",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e0 {rel2} ?e1 .
  FILTER(?e0 != ?e1)
}",
    ),
    (
        "rfo",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rfc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 {rel2} ?e0 .
  FILTER(?e0 != ?e1)
}",
    ),
    (
        "rro",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 {rel2} ?e1 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e0 != ?e2)
}",
    ),
    (
        "rrc",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e0 {rel2} ?e1 .
  FILTER(?e0 != ?e1)
}",
    ),
    (
        "ffo_1-2",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 {rel2} ?e2 .
  ?e1 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2)
}",
    ),
    (
        "fro_1-2",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 {rel2} ?e1 .
  ?e3 {rel2} ?e1 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2)
}",
    ),
    (
        "rfo_1-2",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 {rel2} ?e2 .
  ?e1 {rel2} ?e3 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2)
}",
    ),
    (
        "rro_1-2",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 {rel2} ?e1 .
  ?e3 {rel2} ?e1 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2)
}",
    ),
    (
        "ffo_2-2",
        r"ASK WHERE {
  ?e0 {rel1} ?e2 .
  ?e1 {rel1} ?e2 .
  ?e2 {rel2} ?e3 .
  ?e2 {rel2} ?e4 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2 &&
         ?e4 != ?e0 && ?e4 != ?e1 &&
         ?e4 != ?e2 && ?e4 != ?e3)
}",
    ),
    (
        "fro_2-2",
        r"ASK WHERE {
  ?e0 {rel1} ?e2 .
  ?e1 {rel1} ?e2 .
  ?e3 {rel2} ?e2 .
  ?e4 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2 &&
         ?e4 != ?e0 && ?e4 != ?e1 &&
         ?e4 != ?e2 && ?e4 != ?e3)
}",
    ),
    (
        "rfo_2-2",
        r"ASK WHERE {
  ?e2 {rel1} ?e0 .
  ?e2 {rel1} ?e1 .
  ?e2 {rel2} ?e3 .
  ?e2 {rel2} ?e4 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2 &&
         ?e4 != ?e0 && ?e4 != ?e1 &&
         ?e4 != ?e2 && ?e4 != ?e3)
}",
    ),
    (
        "rro_2-2",
        r"ASK WHERE {
  ?e2 {rel1} ?e0 .
  ?e2 {rel1} ?e1 .
  ?e3 {rel2} ?e2 .
  ?e4 {rel2} ?e2 .
  FILTER(?e0 != ?e1 && ?e1 != ?e2 &&
         ?e2 != ?e3 && ?e3 != ?e0 &&
         ?e0 != ?e2 && ?e1 != ?e2 &&
         ?e4 != ?e0 && ?e4 != ?e1 &&
         ?e4 != ?e2 && ?e4 != ?e3)
}",
    ),
];

/// Two-path patterns without the open/closed split: no FILTER clause, so
/// the outer entities may coincide.
pub(crate) const UNDISTINGUISHED_TEMPLATES: &[(&str, &str)] = &[
    (
        "ff",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e1 {rel2} ?e2 .
}",
    ),
    (
        "fr",
        r"ASK WHERE {
  ?e0 {rel1} ?e1 .
  ?e2 {rel2} ?e1 .
}",
    ),
    (
        "rf",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e1 {rel2} ?e2 .
}",
    ),
    (
        "rr",
        r"ASK WHERE {
  ?e1 {rel1} ?e0 .
  ?e2 {rel2} ?e1 .
}",
    ),
];
