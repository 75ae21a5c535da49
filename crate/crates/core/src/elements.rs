//! Static element data: symbols, default valences and monoisotopic masses.

/// One row of the supported-element table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub atomic_number: u8,
    pub symbol: &'static str,
    /// Mass of the most abundant isotope, in daltons.
    pub monoisotopic_mass: f64,
    /// Allowed valences in increasing order. Empty for elements that never
    /// receive implicit hydrogens.
    pub valences: &'static [u8],
    /// Whether the element may be written outside brackets in SMILES.
    pub organic: bool,
}

const fn el(
    atomic_number: u8,
    symbol: &'static str,
    monoisotopic_mass: f64,
    valences: &'static [u8],
    organic: bool,
) -> Element {
    Element { atomic_number, symbol, monoisotopic_mass, valences, organic }
}

/// Sorted by atomic number.
static ELEMENTS: &[Element] = &[
    el(1, "H", 1.007_825_032_07, &[1], false),
    el(2, "He", 4.002_603_254_15, &[], false),
    el(3, "Li", 7.016_004_55, &[], false),
    el(4, "Be", 9.012_182_2, &[], false),
    el(5, "B", 11.009_305_4, &[3], true),
    el(6, "C", 12.0, &[4], true),
    el(7, "N", 14.003_074_004_8, &[3, 5], true),
    el(8, "O", 15.994_914_619_56, &[2], true),
    el(9, "F", 18.998_403_22, &[1], true),
    el(10, "Ne", 19.992_440_175_4, &[], false),
    el(11, "Na", 22.989_769_280_9, &[], false),
    el(12, "Mg", 23.985_041_7, &[], false),
    el(13, "Al", 26.981_538_63, &[], false),
    el(14, "Si", 27.976_926_532_5, &[], false),
    el(15, "P", 30.973_761_63, &[3, 5], true),
    el(16, "S", 31.972_071, &[2, 4, 6], true),
    el(17, "Cl", 34.968_852_68, &[1], true),
    el(18, "Ar", 39.962_383_122_5, &[], false),
    el(19, "K", 38.963_706_68, &[], false),
    el(20, "Ca", 39.962_590_98, &[], false),
    el(22, "Ti", 47.947_946_3, &[], false),
    el(23, "V", 50.943_959_5, &[], false),
    el(24, "Cr", 51.940_507_5, &[], false),
    el(25, "Mn", 54.938_045_1, &[], false),
    el(26, "Fe", 55.934_937_5, &[], false),
    el(27, "Co", 58.933_195, &[], false),
    el(28, "Ni", 57.935_342_9, &[], false),
    el(29, "Cu", 62.929_597_5, &[], false),
    el(30, "Zn", 63.929_142_2, &[], false),
    el(31, "Ga", 68.925_573_6, &[], false),
    el(32, "Ge", 73.921_177_8, &[], false),
    el(33, "As", 74.921_596_5, &[], false),
    el(34, "Se", 79.916_521_3, &[], false),
    el(35, "Br", 78.918_337_1, &[1], true),
    el(36, "Kr", 83.911_507, &[], false),
    el(37, "Rb", 84.911_789_738, &[], false),
    el(38, "Sr", 87.905_612_1, &[], false),
    el(40, "Zr", 89.904_704_4, &[], false),
    el(42, "Mo", 97.905_408_2, &[], false),
    el(43, "Tc", 97.907_216, &[], false),
    el(44, "Ru", 101.904_349_3, &[], false),
    el(45, "Rh", 102.905_504, &[], false),
    el(46, "Pd", 105.903_486, &[], false),
    el(47, "Ag", 106.905_097, &[], false),
    el(48, "Cd", 113.903_358_5, &[], false),
    el(50, "Sn", 119.902_194_7, &[], false),
    el(51, "Sb", 120.903_815_7, &[], false),
    el(52, "Te", 129.906_224_4, &[], false),
    el(53, "I", 126.904_473, &[1], true),
    el(54, "Xe", 131.904_153_5, &[], false),
    el(55, "Cs", 132.905_451_933, &[], false),
    el(56, "Ba", 137.905_247_2, &[], false),
    el(57, "La", 138.906_353_3, &[], false),
    el(58, "Ce", 139.905_438_7, &[], false),
    el(63, "Eu", 152.921_230_3, &[], false),
    el(64, "Gd", 157.924_103_9, &[], false),
    el(74, "W", 183.950_931_2, &[], false),
    el(76, "Os", 191.961_480_7, &[], false),
    el(77, "Ir", 192.962_926_4, &[], false),
    el(78, "Pt", 194.964_791_1, &[], false),
    el(79, "Au", 196.966_568_7, &[], false),
    el(80, "Hg", 201.970_643, &[], false),
    el(81, "Tl", 204.974_427_5, &[], false),
    el(82, "Pb", 207.976_652_1, &[], false),
    el(83, "Bi", 208.980_398_7, &[], false),
    el(84, "Po", 208.982_430_4, &[], false),
    el(86, "Rn", 222.017_577_7, &[], false),
    el(88, "Ra", 226.025_409_8, &[], false),
    el(92, "U", 238.050_788_2, &[], false),
];

/// Explicit isotope masses, keyed by (atomic number, mass number).
static ISOTOPES: &[(u8, u16, f64)] = &[
    (1, 1, 1.007_825_032_07),
    (1, 2, 2.014_101_777_8),
    (1, 3, 3.016_049_277_7),
    (6, 11, 11.011_433_6),
    (6, 12, 12.0),
    (6, 13, 13.003_354_837_8),
    (6, 14, 14.003_241_989),
    (7, 13, 13.005_738_61),
    (7, 14, 14.003_074_004_8),
    (7, 15, 15.000_108_898_2),
    (8, 15, 15.003_065_6),
    (8, 16, 15.994_914_619_56),
    (8, 17, 16.999_131_7),
    (8, 18, 17.999_161),
    (9, 18, 18.000_938),
    (9, 19, 18.998_403_22),
    (15, 31, 30.973_761_63),
    (15, 32, 31.973_907_27),
    (15, 33, 32.971_725_5),
    (16, 32, 31.972_071),
    (16, 33, 32.971_458_76),
    (16, 34, 33.967_866_9),
    (16, 35, 34.969_032_16),
    (16, 36, 35.967_080_76),
    (17, 35, 34.968_852_68),
    (17, 36, 35.968_306_98),
    (17, 37, 36.965_902_59),
    (35, 76, 75.924_541),
    (35, 79, 78.918_337_1),
    (35, 81, 80.916_290_6),
    (53, 123, 122.905_589),
    (53, 124, 123.906_209_9),
    (53, 125, 124.904_630_2),
    (53, 127, 126.904_473),
    (53, 131, 130.906_124_6),
];

/// Looks up an element by atomic number.
pub fn by_number(atomic_number: u8) -> Option<&'static Element> {
    ELEMENTS.binary_search_by_key(&atomic_number, |e| e.atomic_number).ok().map(|i| &ELEMENTS[i])
}

/// Looks up an element by its case-sensitive symbol (`"Cl"`, not `"CL"`).
pub fn by_symbol(symbol: &str) -> Option<&'static Element> {
    ELEMENTS.iter().find(|e| e.symbol == symbol)
}

/// Symbol for an atomic number, or `"?"` for numbers outside the table.
pub fn symbol(atomic_number: u8) -> &'static str {
    by_number(atomic_number).map_or("?", |e| e.symbol)
}

/// Mass of a specific isotope, if tabulated.
pub fn isotope_mass(atomic_number: u8, mass_number: u16) -> Option<f64> {
    ISOTOPES.iter().find(|&&(z, a, _)| z == atomic_number && a == mass_number).map(|&(_, _, m)| m)
}

/// Elements that may appear as lowercase aromatic symbols in SMILES and SMARTS.
pub fn aromatic_symbol(symbol: &str) -> Option<u8> {
    match symbol {
        "b" => Some(5),
        "c" => Some(6),
        "n" => Some(7),
        "o" => Some(8),
        "p" => Some(15),
        "s" => Some(16),
        "se" => Some(34),
        "as" => Some(33),
        "te" => Some(52),
        _ => None,
    }
}

pub const HYDROGEN: u8 = 1;
pub const CARBON: u8 = 6;
