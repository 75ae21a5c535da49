//! Reference programs used as prompt exemplars, documentation and tests.

pub const ALKANE: &str = r#"CLASS CHEBI:18310 "alkane"
DEFINITION "An acyclic branched or unbranched hydrocarbon having the general formula CnH2n+2, and therefore consisting entirely of hydrogen atoms and saturated carbon atoms."
RULE REJECT IF NOT ELEMENTS SUBSET_OF {C, H} REASON "Contains atoms other than carbon and hydrogen"
RULE REJECT IF BONDS(DOUBLE) + BONDS(TRIPLE) + BONDS(AROMATIC) > 0 REASON "Contains unsaturated bonds (double or triple bonds present)"
RULE REJECT IF RINGS > 0 REASON "Contains rings, not acyclic"
RULE REJECT IF HTOTAL != 2*ATOMS(C) + 2 REASON "Formula does not match CnH2n+2"
DEFAULT ACCEPT REASON "Molecule matches the definition of an alkane"
"#;

pub const DICARBOXYLIC: &str = r#"CLASS CHEBI:35692 "dicarboxylic acid"
DEFINITION "Any carboxylic acid containing two carboxy groups."
RULE ACCEPT IF COUNT("[CX3](=O)[OX2H1]") = 2 REASON "Molecule contains exactly two free carboxyl groups"
DEFAULT REJECT REASON "Molecule does not contain exactly two free carboxyl groups"
"#;

pub const ICOSANOID: &str = r#"CLASS CHEBI:23899 "icosanoid"
DEFINITION "Any member of the group of signalling molecules arising from oxidation of the C20 essential fatty acids (EFAs) icosapentaenoic acid (EPA), arachidonic acid (AA) and dihomo-gamma-linolenic acid (DGLA)."
RULE REJECT IF ATOMS(C) != 20 REASON "Expected 20 carbons"
RULE REJECT IF BONDS(DOUBLE) < 2 OR BONDS(DOUBLE) > 6 REASON "Expected 2-6 double bonds"
RULE REJECT IF ATOMS(O) < 2 REASON "Expected at least 2 oxygen atoms"
RULE REJECT IF NOT MOLWT IN [300, 400] REASON "Molecular weight is outside the expected range for icosanoids"
RULE REJECT IF NOT (MATCH("[OX2H]") OR MATCH("[CX3](=O)[OX2H1]") OR MATCH("[OX2]1[CX4][CX4]1")) REASON "No hydroxyl, carboxyl, or epoxide groups found"
DEFAULT ACCEPT REASON "Contains 20-carbon backbone with multiple double bonds and oxygen-containing functional groups"
"#;

pub const GLYCEROPHOSPHOCHOLINE: &str = r#"CLASS CHEBI:36313 "glycerophosphocholine"
RULE ACCEPT IF MATCH("OCC(O)CO[P](=O)(O)OCC[N+](C)(C)C") REASON "Found free glycerol backbone connectivity"
RULE ACCEPT IF MATCH("OC(=O)OCC(O)CO[P](=O)(O)OCC[N+](C)(C)C") REASON "Found lysophosphatidylcholine connectivity (acyl at sn-1)"
RULE ACCEPT IF MATCH("OCC(OC(=O)*)CO[P](=O)(O)OCC[N+](C)(C)C") REASON "Found lysophosphatidylcholine connectivity (acyl at sn-2)"
DEFAULT REJECT REASON "Glycerophosphocholine connectivity not found; either phosphocholine headgroup or proper glycerol backbone"
"#;

pub const ALL: [&str; 4] = [ALKANE, DICARBOXYLIC, ICOSANOID, GLYCEROPHOSPHOCHOLINE];
