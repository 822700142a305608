use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Academic subject area a chart is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Theme {
    #[serde(rename = "Art and Design")]
    ArtAndDesign,
    Agriculture,
    Geography,
    Medicine,
    Engineering,
    Law,
    Biology,
    Sports,
    Mathematics,
    #[serde(rename = "Environmental Science")]
    EnvironmentalScience,
    Anthropology,
    Sociology,
    #[serde(rename = "Computer Science")]
    ComputerScience,
    Education,
    Architecture,
    Psychology,
    Economics,
    Statistics,
    History,
    Chemistry,
    #[serde(rename = "Media and Journalism")]
    MediaAndJournalism,
    Finance,
    Physics,
    Astronomy,
    Linguistics,
}

/// Words and labels the stub generator draws on to make on-theme charts, and
/// that the stub coherence judge looks for.
#[derive(Debug, Clone, Copy)]
pub struct ThemeVocabulary {
    pub keywords: &'static [&'static str],
    /// (measure name, unit)
    pub measures: &'static [(&'static str, &'static str)],
    /// At least 12 category labels.
    pub categories: &'static [&'static str],
}

macro_rules! vocab {
    ([$($k:expr),*], [$(($m:expr, $u:expr)),*], [$($c:expr),*]) => {
        ThemeVocabulary { keywords: &[$($k),*], measures: &[$(($m, $u)),*], categories: &[$($c),*] }
    };
}

impl Theme {
    pub const ALL: [Theme; 25] = [
        Theme::ArtAndDesign,
        Theme::Agriculture,
        Theme::Geography,
        Theme::Medicine,
        Theme::Engineering,
        Theme::Law,
        Theme::Biology,
        Theme::Sports,
        Theme::Mathematics,
        Theme::EnvironmentalScience,
        Theme::Anthropology,
        Theme::Sociology,
        Theme::ComputerScience,
        Theme::Education,
        Theme::Architecture,
        Theme::Psychology,
        Theme::Economics,
        Theme::Statistics,
        Theme::History,
        Theme::Chemistry,
        Theme::MediaAndJournalism,
        Theme::Finance,
        Theme::Physics,
        Theme::Astronomy,
        Theme::Linguistics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theme::ArtAndDesign => "Art and Design",
            Theme::Agriculture => "Agriculture",
            Theme::Geography => "Geography",
            Theme::Medicine => "Medicine",
            Theme::Engineering => "Engineering",
            Theme::Law => "Law",
            Theme::Biology => "Biology",
            Theme::Sports => "Sports",
            Theme::Mathematics => "Mathematics",
            Theme::EnvironmentalScience => "Environmental Science",
            Theme::Anthropology => "Anthropology",
            Theme::Sociology => "Sociology",
            Theme::ComputerScience => "Computer Science",
            Theme::Education => "Education",
            Theme::Architecture => "Architecture",
            Theme::Psychology => "Psychology",
            Theme::Economics => "Economics",
            Theme::Statistics => "Statistics",
            Theme::History => "History",
            Theme::Chemistry => "Chemistry",
            Theme::MediaAndJournalism => "Media and Journalism",
            Theme::Finance => "Finance",
            Theme::Physics => "Physics",
            Theme::Astronomy => "Astronomy",
            Theme::Linguistics => "Linguistics",
        }
    }

    pub fn vocabulary(self) -> ThemeVocabulary {
        match self {
            Theme::ArtAndDesign => vocab!(
                ["art", "design", "gallery", "artwork", "exhibition"],
                [
                    ("Gallery Attendance", "visitors"),
                    ("Artwork Sales", "kUSD"),
                    ("Exhibition Count", "shows"),
                    ("Design Awards", "awards"),
                    ("Studio Hours", "h"),
                    ("Palette Saturation", "%")
                ],
                [
                    "Painting",
                    "Sculpture",
                    "Photography",
                    "Ceramics",
                    "Textiles",
                    "Printmaking",
                    "Illustration",
                    "Typography",
                    "Installation",
                    "Digital Art",
                    "Calligraphy",
                    "Collage"
                ]
            ),
            Theme::Agriculture => vocab!(
                ["agriculture", "crop", "farm", "harvest", "yield"],
                [
                    ("Crop Yield", "t/ha"),
                    ("Harvest Volume", "kt"),
                    ("Irrigation Use", "ML"),
                    ("Farm Income", "kUSD"),
                    ("Soil Nitrogen", "mg/kg"),
                    ("Fertilizer Use", "kg/ha")
                ],
                [
                    "Wheat", "Maize", "Rice", "Barley", "Soybean", "Sorghum", "Oats", "Canola", "Cotton", "Potato",
                    "Cassava", "Millet"
                ]
            ),
            Theme::Geography => vocab!(
                ["geography", "region", "terrain", "elevation", "river"],
                [
                    ("River Discharge", "m3/s"),
                    ("Mean Elevation", "m"),
                    ("Population Density", "per km2"),
                    ("Land Cover", "%"),
                    ("Coastline Erosion", "m/yr"),
                    ("Annual Rainfall", "mm")
                ],
                [
                    "Andes",
                    "Alps",
                    "Sahara",
                    "Amazon",
                    "Tundra",
                    "Delta",
                    "Plateau",
                    "Steppe",
                    "Fjord",
                    "Savanna",
                    "Archipelago",
                    "Basin"
                ]
            ),
            Theme::Medicine => vocab!(
                ["medicine", "clinical", "patient", "treatment", "hospital"],
                [
                    ("Patient Recovery Rate", "%"),
                    ("Hospital Admissions", "cases"),
                    ("Treatment Response", "%"),
                    ("Blood Pressure", "mmHg"),
                    ("Dosage Level", "mg"),
                    ("Clinic Wait Time", "min")
                ],
                [
                    "Cardiology",
                    "Oncology",
                    "Neurology",
                    "Pediatrics",
                    "Radiology",
                    "Dermatology",
                    "Surgery",
                    "Psychiatry",
                    "Orthopedics",
                    "Urology",
                    "Nephrology",
                    "Geriatrics"
                ]
            ),
            Theme::Engineering => vocab!(
                ["engineering", "load", "stress", "turbine", "circuit"],
                [
                    ("Tensile Stress", "MPa"),
                    ("Turbine Output", "MW"),
                    ("Circuit Efficiency", "%"),
                    ("Bridge Load", "kN"),
                    ("Component Failures", "units"),
                    ("Thermal Loss", "kW")
                ],
                [
                    "Steel",
                    "Concrete",
                    "Aluminum",
                    "Titanium",
                    "Composite",
                    "Copper",
                    "Polymer",
                    "Glass",
                    "Timber",
                    "Carbon Fiber",
                    "Ceramic",
                    "Alloy X"
                ]
            ),
            Theme::Law => vocab!(
                ["law", "court", "legal", "case", "litigation"],
                [
                    ("Court Caseload", "cases"),
                    ("Case Resolution Time", "days"),
                    ("Litigation Costs", "kUSD"),
                    ("Appeal Rate", "%"),
                    ("Legal Aid Requests", "requests"),
                    ("Verdict Count", "verdicts")
                ],
                [
                    "Civil",
                    "Criminal",
                    "Family",
                    "Tax",
                    "Labor",
                    "Patent",
                    "Maritime",
                    "Contract",
                    "Property",
                    "Immigration",
                    "Antitrust",
                    "Privacy"
                ]
            ),
            Theme::Biology => vocab!(
                ["biology", "cell", "species", "gene", "enzyme"],
                [
                    ("Cell Growth", "cells/mL"),
                    ("Gene Expression", "TPM"),
                    ("Enzyme Activity", "U/mg"),
                    ("Species Abundance", "individuals"),
                    ("Protein Yield", "mg/L"),
                    ("Mutation Rate", "per Mb")
                ],
                [
                    "E. coli",
                    "Yeast",
                    "Zebrafish",
                    "Drosophila",
                    "Arabidopsis",
                    "Mouse",
                    "C. elegans",
                    "Xenopus",
                    "Algae",
                    "Fungi",
                    "Bacillus",
                    "Plankton"
                ]
            ),
            Theme::Sports => vocab!(
                ["sports", "team", "athlete", "match", "season"],
                [
                    ("Match Wins", "wins"),
                    ("Athlete Sprint Speed", "km/h"),
                    ("Season Attendance", "k fans"),
                    ("Goals Scored", "goals"),
                    ("Training Load", "AU"),
                    ("Injury Count", "injuries")
                ],
                [
                    "Football",
                    "Tennis",
                    "Cricket",
                    "Rugby",
                    "Cycling",
                    "Rowing",
                    "Swimming",
                    "Basketball",
                    "Hockey",
                    "Volleyball",
                    "Athletics",
                    "Baseball"
                ]
            ),
            Theme::Mathematics => vocab!(
                ["mathematics", "function", "convergence", "theorem", "sequence"],
                [
                    ("Series Convergence", "error"),
                    ("Function Value", "f(x)"),
                    ("Proof Length", "lines"),
                    ("Solver Iterations", "steps"),
                    ("Prime Gap", "gap"),
                    ("Approximation Error", "1e-3")
                ],
                [
                    "Algebra",
                    "Topology",
                    "Geometry",
                    "Calculus",
                    "Combinatorics",
                    "Number Theory",
                    "Probability",
                    "Logic",
                    "Analysis",
                    "Graph Theory",
                    "Optimization",
                    "Set Theory"
                ]
            ),
            Theme::EnvironmentalScience => vocab!(
                ["environmental", "emission", "pollution", "climate", "ecosystem"],
                [
                    ("CO2 Emissions", "Mt"),
                    ("Air Pollution Index", "AQI"),
                    ("Forest Cover", "%"),
                    ("Water Quality Score", "index"),
                    ("Ecosystem Biomass", "t/ha"),
                    ("Climate Anomaly", "°C")
                ],
                [
                    "Wetland",
                    "Rainforest",
                    "Grassland",
                    "Reef",
                    "Mangrove",
                    "Peatland",
                    "Estuary",
                    "Glacier",
                    "Desert",
                    "Lake",
                    "Woodland",
                    "Marsh"
                ]
            ),
            Theme::Anthropology => vocab!(
                ["anthropology", "cultural", "kinship", "ritual", "ethnographic"],
                [
                    ("Ritual Frequency", "events/yr"),
                    ("Kinship Network Size", "members"),
                    ("Artifact Finds", "artifacts"),
                    ("Language Retention", "%"),
                    ("Settlement Size", "households"),
                    ("Ethnographic Interviews", "interviews")
                ],
                [
                    "Highland", "Coastal", "Nomadic", "Pastoral", "Urban", "Riverine", "Island", "Forest", "Mountain",
                    "Valley", "Desert", "Delta"
                ]
            ),
            Theme::Sociology => vocab!(
                ["sociology", "social", "community", "survey", "household"],
                [
                    ("Community Participation", "%"),
                    ("Social Trust Index", "index"),
                    ("Household Size", "persons"),
                    ("Survey Response Rate", "%"),
                    ("Volunteer Hours", "h"),
                    ("Migration Flow", "k people")
                ],
                [
                    "Urban", "Suburban", "Rural", "Youth", "Seniors", "Families", "Students", "Workers", "Migrants",
                    "Retirees", "Renters", "Owners"
                ]
            ),
            Theme::ComputerScience => vocab!(
                ["computer", "algorithm", "latency", "model", "server"],
                [
                    ("Algorithm Runtime", "ms"),
                    ("Server Latency", "ms"),
                    ("Model Accuracy", "%"),
                    ("Cache Hit Rate", "%"),
                    ("Throughput", "req/s"),
                    ("Memory Usage", "GB")
                ],
                [
                    "Quicksort",
                    "Mergesort",
                    "Heapsort",
                    "BFS",
                    "DFS",
                    "Dijkstra",
                    "A*",
                    "Transformer",
                    "CNN",
                    "RNN",
                    "B-Tree",
                    "Hash Map"
                ]
            ),
            Theme::Education => vocab!(
                ["education", "student", "school", "enrollment", "learning"],
                [
                    ("Student Enrollment", "students"),
                    ("Graduation Rate", "%"),
                    ("Test Scores", "points"),
                    ("Class Size", "students"),
                    ("Teacher Hours", "h/week"),
                    ("Course Completion", "%")
                ],
                [
                    "Primary",
                    "Secondary",
                    "Vocational",
                    "Undergraduate",
                    "Graduate",
                    "Online",
                    "STEM",
                    "Humanities",
                    "Arts",
                    "Languages",
                    "Special Ed",
                    "Adult Ed"
                ]
            ),
            Theme::Architecture => vocab!(
                ["architecture", "building", "floor", "facade", "structure"],
                [
                    ("Building Height", "m"),
                    ("Floor Area", "m2"),
                    ("Energy Rating", "kWh/m2"),
                    ("Construction Cost", "MUSD"),
                    ("Facade Glazing", "%"),
                    ("Daylight Factor", "%")
                ],
                [
                    "Gothic",
                    "Baroque",
                    "Modernist",
                    "Brutalist",
                    "Art Deco",
                    "Bauhaus",
                    "Victorian",
                    "Colonial",
                    "Minimalist",
                    "Futurist",
                    "Neoclassical",
                    "Romanesque"
                ]
            ),
            Theme::Psychology => vocab!(
                ["psychology", "cognitive", "behavior", "memory", "stress"],
                [
                    ("Memory Recall", "%"),
                    ("Reaction Time", "ms"),
                    ("Stress Score", "points"),
                    ("Attention Span", "min"),
                    ("Wellbeing Index", "index"),
                    ("Anxiety Level", "GAD-7")
                ],
                [
                    "Control",
                    "Mindfulness",
                    "CBT",
                    "Placebo",
                    "Exercise",
                    "Sleep",
                    "Music",
                    "Meditation",
                    "Therapy",
                    "Reading",
                    "Gaming",
                    "Social"
                ]
            ),
            Theme::Economics => vocab!(
                ["economic", "gdp", "inflation", "market", "trade"],
                [
                    ("GDP Growth", "%"),
                    ("Inflation Rate", "%"),
                    ("Trade Balance", "BUSD"),
                    ("Unemployment Rate", "%"),
                    ("Consumer Spending", "BUSD"),
                    ("Market Output", "index")
                ],
                [
                    "Manufacturing",
                    "Services",
                    "Retail",
                    "Energy",
                    "Construction",
                    "Tourism",
                    "Mining",
                    "Agrifood",
                    "Transport",
                    "Telecom",
                    "Healthcare",
                    "Housing"
                ]
            ),
            Theme::Statistics => vocab!(
                ["statistics", "sample", "variance", "distribution", "estimate"],
                [
                    ("Sample Mean", "units"),
                    ("Variance Estimate", "sigma2"),
                    ("Confidence Width", "units"),
                    ("Sample Size", "n"),
                    ("P-value Count", "tests"),
                    ("Estimator Bias", "units")
                ],
                [
                    "Group A", "Group B", "Group C", "Group D", "Cohort 1", "Cohort 2", "Cohort 3", "Trial X",
                    "Trial Y", "Panel 1", "Panel 2", "Panel 3"
                ]
            ),
            Theme::History => vocab!(
                ["history", "historical", "empire", "century", "archive"],
                [
                    ("Archive Records", "documents"),
                    ("Empire Territory", "M km2"),
                    ("Historical Population", "millions"),
                    ("Battle Count", "battles"),
                    ("Treaty Signings", "treaties"),
                    ("Manuscript Copies", "copies")
                ],
                [
                    "Roman",
                    "Ottoman",
                    "Ming",
                    "Mughal",
                    "Byzantine",
                    "Inca",
                    "Aztec",
                    "Mongol",
                    "Persian",
                    "Frankish",
                    "Venetian",
                    "Songhai"
                ]
            ),
            Theme::Chemistry => vocab!(
                ["chemistry", "reaction", "compound", "molecular", "catalyst"],
                [
                    ("Reaction Rate", "mol/s"),
                    ("Compound Yield", "%"),
                    ("Catalyst Efficiency", "%"),
                    ("Molecular Weight", "g/mol"),
                    ("Solution pH", "pH"),
                    ("Bond Energy", "kJ/mol")
                ],
                [
                    "Ethanol",
                    "Benzene",
                    "Acetone",
                    "Methane",
                    "Ammonia",
                    "Glucose",
                    "Sulfuric Acid",
                    "Toluene",
                    "Phenol",
                    "Urea",
                    "Ethylene",
                    "Nitric Acid"
                ]
            ),
            Theme::MediaAndJournalism => vocab!(
                ["media", "journalism", "news", "audience", "press"],
                [
                    ("News Readership", "k readers"),
                    ("Audience Share", "%"),
                    ("Article Output", "articles"),
                    ("Press Freedom Index", "index"),
                    ("Podcast Downloads", "k"),
                    ("Video Views", "M")
                ],
                [
                    "Print",
                    "Broadcast",
                    "Online",
                    "Radio",
                    "Podcast",
                    "Newsletter",
                    "Streaming",
                    "Social",
                    "Wire",
                    "Magazine",
                    "Blog",
                    "Video"
                ]
            ),
            Theme::Finance => vocab!(
                ["finance", "portfolio", "stock", "return", "asset"],
                [
                    ("Portfolio Return", "%"),
                    ("Stock Price", "USD"),
                    ("Asset Volatility", "%"),
                    ("Bond Yield", "%"),
                    ("Fund Inflows", "MUSD"),
                    ("Credit Spread", "bp")
                ],
                [
                    "Equities",
                    "Bonds",
                    "Commodities",
                    "REITs",
                    "Cash",
                    "Gold",
                    "Crypto",
                    "FX",
                    "Options",
                    "Futures",
                    "Private Equity",
                    "Hedge Funds"
                ]
            ),
            Theme::Physics => vocab!(
                ["physics", "particle", "energy", "velocity", "quantum"],
                [
                    ("Particle Velocity", "m/s"),
                    ("Energy Output", "kJ"),
                    ("Field Strength", "T"),
                    ("Quantum Yield", "%"),
                    ("Wave Amplitude", "mm"),
                    ("Detector Counts", "counts")
                ],
                [
                    "Proton", "Neutron", "Electron", "Muon", "Photon", "Neutrino", "Pion", "Kaon", "Quark", "Gluon",
                    "Boson", "Tau"
                ]
            ),
            Theme::Astronomy => vocab!(
                ["astronomy", "stellar", "galaxy", "orbit", "planet"],
                [
                    ("Stellar Luminosity", "Lsun"),
                    ("Galaxy Redshift", "z"),
                    ("Orbital Period", "days"),
                    ("Planet Radius", "Rearth"),
                    ("Telescope Exposure", "s"),
                    ("Meteor Rate", "per h")
                ],
                [
                    "Mercury", "Venus", "Mars", "Jupiter", "Saturn", "Uranus", "Neptune", "Pluto", "Ceres", "Vega",
                    "Sirius", "Rigel"
                ]
            ),
            Theme::Linguistics => vocab!(
                ["linguistics", "language", "phoneme", "lexical", "speaker"],
                [
                    ("Speaker Population", "M speakers"),
                    ("Lexical Diversity", "TTR"),
                    ("Phoneme Inventory", "phonemes"),
                    ("Word Frequency", "per M"),
                    ("Syntax Depth", "levels"),
                    ("Dialect Coverage", "%")
                ],
                [
                    "English",
                    "Mandarin",
                    "Spanish",
                    "Arabic",
                    "Hindi",
                    "Swahili",
                    "Japanese",
                    "Russian",
                    "Portuguese",
                    "Turkish",
                    "Korean",
                    "Finnish"
                ]
            ),
        }
    }

    /// Lower-cased tokens that mark text as belonging to this theme.
    pub fn marker_tokens(self) -> Vec<String> {
        let v = self.vocabulary();
        let mut tokens: Vec<String> = v.keywords.iter().map(|k| k.to_lowercase()).collect();
        tokens.push(self.name().to_lowercase());
        tokens.extend(v.measures.iter().map(|(m, _)| m.to_lowercase()));
        tokens
    }
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theme {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let want = s.trim();
        Theme::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(want))
            .ok_or_else(|| ParseError::UnknownTheme(s.to_string()))
    }
}
