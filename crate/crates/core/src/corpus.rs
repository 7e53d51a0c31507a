//! The bundled example programs with their property, ordering and history
//! files.

pub const PETERSON: &str = include_str!("../../../corpus/peterson.cvl");
pub const PETERSON_TURN2: &str = include_str!("../../../corpus/peterson_turn2.cvl");
pub const PETERSON_PROPS: &str = include_str!("../../../corpus/peterson.props");
pub const PETERSON_ORDER: &str = include_str!("../../../corpus/peterson.order");

pub const BAKERY: &str = include_str!("../../../corpus/bakery2.cvl");
pub const BAKERY_PROPS: &str = include_str!("../../../corpus/bakery2.props");
pub const BAKERY_ORDER: &str = include_str!("../../../corpus/bakery2.order");
pub const BAKERY_HIST: &str = include_str!("../../../corpus/bakery2.hist");
pub const BAKERY_CONS: &str = include_str!("../../../corpus/bakery2.cons");

pub const SIMPSON: &str = include_str!("../../../corpus/simpson4.cvl");
pub const SIMPSON_PROPS: &str = include_str!("../../../corpus/simpson4.props");
pub const SIMPSON_ORDER: &str = include_str!("../../../corpus/simpson4.order");

pub const SB: &str = include_str!("../../../corpus/sb.cvl");
pub const SB_PROPS: &str = include_str!("../../../corpus/sb.props");
pub const SB_ORDER: &str = include_str!("../../../corpus/sb.order");

/// `(name, program, properties, orderings)` for every bundled program.
pub const ALL: &[(&str, &str, &str, &str)] = &[
    ("peterson", PETERSON, PETERSON_PROPS, PETERSON_ORDER),
    ("bakery2", BAKERY, BAKERY_PROPS, BAKERY_ORDER),
    ("simpson4", SIMPSON, SIMPSON_PROPS, SIMPSON_ORDER),
    ("sb", SB, SB_PROPS, SB_ORDER),
];

/// Every bundled file by its name in the `corpus/` directory.
pub const FILES: &[(&str, &str)] = &[
    ("peterson.cvl", PETERSON),
    ("peterson_turn2.cvl", PETERSON_TURN2),
    ("peterson.props", PETERSON_PROPS),
    ("peterson.order", PETERSON_ORDER),
    ("bakery2.cvl", BAKERY),
    ("bakery2.props", BAKERY_PROPS),
    ("bakery2.order", BAKERY_ORDER),
    ("bakery2.hist", BAKERY_HIST),
    ("bakery2.cons", BAKERY_CONS),
    ("simpson4.cvl", SIMPSON),
    ("simpson4.props", SIMPSON_PROPS),
    ("simpson4.order", SIMPSON_ORDER),
    ("sb.cvl", SB),
    ("sb.props", SB_PROPS),
    ("sb.order", SB_ORDER),
];

pub fn file(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
