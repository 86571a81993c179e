//! Deterministic synthetic corpora.
//!
//! Topics are organized in research fields. Each synthetic researcher picks a
//! home field, lists one to five topics drawn mostly from it with Zipf-like
//! popularity, and is affiliated with a department of that field. The raw
//! topic fields are deliberately dirty: mixed separators, capitalization,
//! markup, conjunction-joined pairs, and injected plural or token-permuted
//! variants that normalization is expected to merge back.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, LogNormal};

use super::{Corpus, Region, ResearcherProfile, University};

/// One research field of the synthetic vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub department: String,
    /// Topics with relative popularity weights.
    pub topics: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub fields: Vec<Field>,
}

struct FieldWords {
    name: &'static str,
    department: &'static str,
    anchors: &'static [&'static str],
    modifiers: &'static [&'static str],
    heads: &'static [&'static str],
}

const FIELDS: &[FieldWords] = &[
    FieldWords {
        name: "machine learning",
        department: "Computer Science",
        anchors: &[
            "machine learning",
            "deep learning",
            "artificial intelligence",
            "neural networks",
            "reinforcement learning",
            "pattern recognition",
        ],
        modifiers: &[
            "bayesian",
            "deep",
            "probabilistic",
            "sparse",
            "kernel",
            "online",
            "federated",
            "adversarial",
            "generative",
            "causal",
            "multitask",
            "unsupervised",
            "supervised",
            "graphical",
            "variational",
            "transfer",
            "statistical",
            "active",
            "robust",
            "scalable",
        ],
        heads: &[
            "learning",
            "inference",
            "model",
            "optimization",
            "classification",
            "regression",
            "embedding",
            "representation",
            "estimation",
            "clustering",
            "ranking",
            "sampling",
            "kernel",
            "policy",
            "prediction",
            "reasoning",
            "search",
            "planning",
            "forecasting",
            "detection",
        ],
    },
    FieldWords {
        name: "computer vision",
        department: "Electrical Engineering",
        anchors: &[
            "computer vision",
            "image processing",
            "medical imaging",
            "visual tracking",
            "object recognition",
        ],
        modifiers: &[
            "visual",
            "stereo",
            "video",
            "image",
            "scene",
            "3d",
            "multiview",
            "hyperspectral",
            "thermal",
            "remote",
            "texture",
            "motion",
            "depth",
            "face",
            "gesture",
            "shape",
            "event",
            "lidar",
            "aerial",
            "photometric",
        ],
        heads: &[
            "segmentation",
            "reconstruction",
            "tracking",
            "recognition",
            "registration",
            "restoration",
            "synthesis",
            "understanding",
            "retrieval",
            "enhancement",
            "compression",
            "calibration",
            "parsing",
            "denoising",
            "matching",
            "localization",
            "captioning",
            "rendering",
            "analysis",
            "sensing",
        ],
    },
    FieldWords {
        name: "theory",
        department: "Mathematics",
        anchors: &[
            "algorithms",
            "graph theory",
            "computational complexity",
            "combinatorics",
            "cryptography",
            "graph drawing",
        ],
        modifiers: &[
            "approximation",
            "randomized",
            "parameterized",
            "distributed",
            "quantum",
            "algebraic",
            "geometric",
            "discrete",
            "combinatorial",
            "spectral",
            "extremal",
            "probabilistic",
            "online",
            "streaming",
            "parallel",
            "dynamic",
            "structural",
            "topological",
            "additive",
            "analytic",
        ],
        heads: &[
            "algorithm",
            "complexity",
            "graph",
            "geometry",
            "topology",
            "number theory",
            "logic",
            "automata",
            "coding",
            "design",
            "game theory",
            "matroid",
            "polytope",
            "lattice",
            "semantics",
            "verification",
            "hashing",
            "sorting",
            "embedding",
            "coloring",
        ],
    },
    FieldWords {
        name: "data management",
        department: "Information Science",
        anchors: &[
            "data mining",
            "databases",
            "big data",
            "information retrieval",
            "data science",
        ],
        modifiers: &[
            "relational",
            "semantic",
            "temporal",
            "spatial",
            "graph",
            "web",
            "text",
            "stream",
            "probabilistic",
            "scientific",
            "federated",
            "columnar",
            "knowledge",
            "privacy",
            "data",
            "social",
            "mobile",
            "multimedia",
            "linked",
            "uncertain",
        ],
        heads: &[
            "database",
            "query processing",
            "indexing",
            "mining",
            "integration",
            "cleaning",
            "warehousing",
            "provenance",
            "visualization",
            "analytics",
            "management",
            "search",
            "storage",
            "ontology",
            "schema",
            "summarization",
            "recommendation",
            "exploration",
            "curation",
            "wrangling",
        ],
    },
    FieldWords {
        name: "systems",
        department: "Computer Engineering",
        anchors: &[
            "computer networks",
            "operating systems",
            "distributed systems",
            "cloud computing",
            "computer security",
            "internet of things",
        ],
        modifiers: &[
            "wireless",
            "mobile",
            "embedded",
            "cloud",
            "edge",
            "network",
            "software",
            "hardware",
            "secure",
            "fault tolerant",
            "real time",
            "energy efficient",
            "peer to peer",
            "cyber physical",
            "virtual",
            "programmable",
            "optical",
            "vehicular",
            "sensor",
            "storage",
        ],
        heads: &[
            "network",
            "system",
            "protocol",
            "architecture",
            "security",
            "scheduling",
            "routing",
            "virtualization",
            "caching",
            "compiler",
            "runtime",
            "middleware",
            "firmware",
            "testing",
            "debugging",
            "monitoring",
            "consensus",
            "transport",
            "processor",
            "memory",
        ],
    },
    FieldWords {
        name: "human computer interaction",
        department: "Informatics",
        anchors: &[
            "human computer interaction",
            "visualization",
            "information visualization",
            "user experience",
            "ubiquitous computing",
        ],
        modifiers: &[
            "interactive",
            "collaborative",
            "tangible",
            "accessible",
            "wearable",
            "immersive",
            "social",
            "participatory",
            "visual",
            "gestural",
            "conversational",
            "haptic",
            "mixed reality",
            "crowd",
            "usable",
            "civic",
            "inclusive",
            "playful",
            "persuasive",
            "ambient",
        ],
        heads: &[
            "interface",
            "interaction",
            "design",
            "computing",
            "visualization",
            "analytics",
            "technology",
            "media",
            "games",
            "display",
            "feedback",
            "prototyping",
            "evaluation",
            "storytelling",
            "authoring",
            "learning",
            "awareness",
            "privacy",
            "creativity",
            "sensemaking",
        ],
    },
    FieldWords {
        name: "robotics",
        department: "Mechanical Engineering",
        anchors: &[
            "robotics",
            "control systems",
            "autonomous vehicles",
            "mechatronics",
            "motion planning",
        ],
        modifiers: &[
            "mobile",
            "legged",
            "aerial",
            "underwater",
            "soft",
            "swarm",
            "humanoid",
            "surgical",
            "industrial",
            "adaptive",
            "nonlinear",
            "optimal",
            "predictive",
            "cooperative",
            "bioinspired",
            "compliant",
            "teleoperated",
            "modular",
            "field",
            "assistive",
        ],
        heads: &[
            "robot",
            "control",
            "manipulation",
            "locomotion",
            "navigation",
            "actuator",
            "perception",
            "grasping",
            "dynamics",
            "kinematics",
            "estimation",
            "mapping",
            "exoskeleton",
            "drone",
            "vehicle",
            "gripper",
            "servo",
            "mechanism",
            "autonomy",
            "teleoperation",
        ],
    },
    FieldWords {
        name: "bioinformatics",
        department: "Biology",
        anchors: &[
            "bioinformatics",
            "genomics",
            "computational biology",
            "systems biology",
            "proteomics",
            "molecular biology",
        ],
        modifiers: &[
            "comparative",
            "functional",
            "structural",
            "statistical",
            "population",
            "single cell",
            "cancer",
            "microbial",
            "plant",
            "evolutionary",
            "metabolic",
            "regulatory",
            "clinical",
            "epigenetic",
            "synthetic",
            "quantitative",
            "mathematical",
            "developmental",
            "cellular",
            "marine",
        ],
        heads: &[
            "genomics",
            "genetics",
            "proteomics",
            "transcriptomics",
            "metabolomics",
            "biology",
            "phylogenetics",
            "sequencing",
            "biochemistry",
            "immunology",
            "epigenomics",
            "biophysics",
            "virology",
            "microbiology",
            "pathology",
            "physiology",
            "pharmacology",
            "toxicology",
            "oncology",
            "neurogenetics",
        ],
    },
    FieldWords {
        name: "ecology",
        department: "Ecology and Evolutionary Biology",
        anchors: &[
            "ecology",
            "evolution",
            "conservation biology",
            "biodiversity",
            "climate change",
        ],
        modifiers: &[
            "community",
            "population",
            "landscape",
            "marine",
            "freshwater",
            "forest",
            "tropical",
            "urban",
            "behavioral",
            "evolutionary",
            "microbial",
            "soil",
            "plant",
            "animal",
            "desert",
            "arctic",
            "restoration",
            "disease",
            "chemical",
            "molecular",
        ],
        heads: &[
            "ecology",
            "evolution",
            "biogeography",
            "conservation",
            "ecosystem",
            "phylogeny",
            "adaptation",
            "speciation",
            "herbivory",
            "pollination",
            "symbiosis",
            "migration",
            "dispersal",
            "demography",
            "physiology",
            "biodiversity",
            "invasion",
            "foraging",
            "predation",
            "mutualism",
        ],
    },
    FieldWords {
        name: "chemistry",
        department: "Chemistry and Chemical Biology",
        anchors: &[
            "organic chemistry",
            "catalysis",
            "physical chemistry",
            "analytical chemistry",
            "electrochemistry",
        ],
        modifiers: &[
            "organic",
            "inorganic",
            "physical",
            "analytical",
            "theoretical",
            "computational",
            "supramolecular",
            "medicinal",
            "polymer",
            "green",
            "surface",
            "photo",
            "electro",
            "organometallic",
            "bioinorganic",
            "atmospheric",
            "nuclear",
            "solid state",
            "colloid",
            "flow",
        ],
        heads: &[
            "chemistry",
            "catalysis",
            "synthesis",
            "spectroscopy",
            "kinetics",
            "electrochemistry",
            "photochemistry",
            "crystallography",
            "thermodynamics",
            "chromatography",
            "mass spectrometry",
            "self assembly",
            "reactivity",
            "ligand",
            "nanocluster",
            "polymerization",
            "oxidation",
            "reduction",
            "solvation",
            "adsorption",
        ],
    },
    FieldWords {
        name: "physics",
        department: "Physics",
        anchors: &[
            "condensed matter physics",
            "quantum physics",
            "astrophysics",
            "particle physics",
            "optics",
        ],
        modifiers: &[
            "quantum",
            "condensed matter",
            "particle",
            "nuclear",
            "atomic",
            "plasma",
            "statistical",
            "high energy",
            "theoretical",
            "experimental",
            "nonlinear",
            "ultrafast",
            "gravitational",
            "solar",
            "cosmic",
            "topological",
            "mesoscopic",
            "soft matter",
            "laser",
            "space",
        ],
        heads: &[
            "physics",
            "optics",
            "field theory",
            "cosmology",
            "astrophysics",
            "magnetism",
            "superconductivity",
            "spectroscopy",
            "transport",
            "photonics",
            "turbulence",
            "gravitation",
            "radiation",
            "detectors",
            "scattering",
            "plasmonics",
            "entanglement",
            "simulation",
            "thermodynamics",
            "acoustics",
        ],
    },
    FieldWords {
        name: "materials science",
        department: "Materials Science and Engineering",
        anchors: &[
            "materials science",
            "nanotechnology",
            "thin films",
            "energy materials",
            "supercapacitor",
        ],
        modifiers: &[
            "nanostructured",
            "functional",
            "composite",
            "ceramic",
            "metallic",
            "polymeric",
            "porous",
            "magnetic",
            "organic",
            "two dimensional",
            "biomedical",
            "smart",
            "energy",
            "hybrid",
            "amorphous",
            "crystalline",
            "flexible",
            "printed",
            "piezoelectric",
            "thermoelectric",
        ],
        heads: &[
            "materials",
            "nanomaterials",
            "alloys",
            "ceramics",
            "thin film",
            "coatings",
            "batteries",
            "semiconductors",
            "fabrication",
            "characterization",
            "corrosion",
            "fracture",
            "membranes",
            "catalysts",
            "composites",
            "devices",
            "sensors",
            "processing",
            "microstructure",
            "interfaces",
        ],
    },
    FieldWords {
        name: "economics",
        department: "Economics",
        anchors: &[
            "economics",
            "econometrics",
            "finance",
            "macroeconomics",
            "development economics",
        ],
        modifiers: &[
            "applied",
            "behavioral",
            "experimental",
            "financial",
            "labor",
            "public",
            "international",
            "monetary",
            "environmental",
            "health",
            "industrial",
            "urban",
            "agricultural",
            "political",
            "computational",
            "institutional",
            "regional",
            "energy",
            "household",
            "spatial",
        ],
        heads: &[
            "economics",
            "econometrics",
            "finance",
            "policy",
            "markets",
            "trade",
            "growth",
            "inequality",
            "auctions",
            "contracts",
            "banking",
            "taxation",
            "regulation",
            "investment",
            "accounting",
            "pricing",
            "insurance",
            "productivity",
            "innovation",
            "employment",
        ],
    },
    FieldWords {
        name: "earth science",
        department: "Geosciences",
        anchors: &[
            "geology",
            "geophysics",
            "hydrology",
            "oceanography",
            "remote sensing",
        ],
        modifiers: &[
            "structural",
            "sedimentary",
            "marine",
            "planetary",
            "environmental",
            "glacial",
            "volcanic",
            "seismic",
            "atmospheric",
            "coastal",
            "petroleum",
            "economic",
            "isotope",
            "paleo",
            "karst",
            "fluvial",
            "igneous",
            "metamorphic",
            "tectonic",
            "soil",
        ],
        heads: &[
            "geology",
            "geophysics",
            "geochemistry",
            "hydrology",
            "seismology",
            "tectonics",
            "sedimentology",
            "volcanology",
            "petrology",
            "mineralogy",
            "stratigraphy",
            "geomorphology",
            "climatology",
            "oceanography",
            "glaciology",
            "paleontology",
            "meteorology",
            "geodesy",
            "hydrogeology",
            "limnology",
        ],
    },
    FieldWords {
        name: "neuroscience",
        department: "Neuroscience",
        anchors: &[
            "neuroscience",
            "cognitive neuroscience",
            "psychology",
            "neuroimaging",
            "cognitive science",
        ],
        modifiers: &[
            "cognitive",
            "computational",
            "systems",
            "cellular",
            "molecular",
            "developmental",
            "affective",
            "social",
            "clinical",
            "behavioral",
            "sensory",
            "auditory",
            "visual",
            "motor",
            "translational",
            "comparative",
            "theoretical",
            "perceptual",
            "educational",
            "evolutionary",
        ],
        heads: &[
            "neuroscience",
            "psychology",
            "neuroimaging",
            "plasticity",
            "memory",
            "attention",
            "perception",
            "language",
            "decision making",
            "emotion",
            "cognition",
            "neurophysiology",
            "electrophysiology",
            "psychiatry",
            "neurology",
            "consciousness",
            "sleep",
            "motivation",
            "reward",
            "development",
        ],
    },
    FieldWords {
        name: "statistics",
        department: "Statistics",
        anchors: &[
            "statistics",
            "biostatistics",
            "epidemiology",
            "public health",
            "survey methodology",
        ],
        modifiers: &[
            "bayesian",
            "nonparametric",
            "spatial",
            "longitudinal",
            "multivariate",
            "high dimensional",
            "robust",
            "sequential",
            "functional",
            "survival",
            "categorical",
            "computational",
            "mathematical",
            "applied",
            "environmental",
            "genetic",
            "clinical",
            "social",
            "official",
            "sports",
        ],
        heads: &[
            "statistics",
            "inference",
            "modeling",
            "analysis",
            "design",
            "epidemiology",
            "biostatistics",
            "methodology",
            "sampling",
            "testing",
            "estimation",
            "data analysis",
            "trials",
            "surveillance",
            "demography",
            "psychometrics",
            "forecasting",
            "mixed models",
            "causal inference",
            "smoothing",
        ],
    },
];

impl Vocabulary {
    /// The built-in 16-field vocabulary with up to `topics_per_field` topics
    /// per field. Anchors come first, then two-word combinations in an
    /// interleaved order, then three-word combinations if more are requested.
    pub fn generated(topics_per_field: usize) -> Vocabulary {
        let fields = FIELDS
            .iter()
            .map(|fw| {
                let mut names: Vec<String> = Vec::new();
                let mut seen = std::collections::HashSet::new();
                let mut push = |names: &mut Vec<String>, s: String| {
                    if names.len() < topics_per_field && seen.insert(s.clone()) {
                        names.push(s);
                    }
                };
                for a in fw.anchors {
                    push(&mut names, a.to_string());
                }
                let (nm, nh) = (fw.modifiers.len(), fw.heads.len());
                // diagonal walk so early topics spread over all words
                for d in 0..nm * nh {
                    let m = d % nm;
                    let h = (d / nm + d) % nh;
                    if fw.modifiers[m] != fw.heads[h] {
                        push(&mut names, format!("{} {}", fw.modifiers[m], fw.heads[h]));
                    }
                }
                'outer: for m2 in 0..nm {
                    for d in 0..nm * nh {
                        if names.len() >= topics_per_field {
                            break 'outer;
                        }
                        let m = d % nm;
                        let h = (d / nm + d) % nh;
                        if m != m2 {
                            push(
                                &mut names,
                                format!("{} {} {}", fw.modifiers[m2], fw.modifiers[m], fw.heads[h]),
                            );
                        }
                    }
                }
                let topics = names
                    .into_iter()
                    .enumerate()
                    .map(|(rank, name)| (name, 1.0 / (rank as f64 + 2.0).powf(1.05)))
                    .collect();
                Field {
                    name: fw.name.to_string(),
                    department: fw.department.to_string(),
                    topics,
                }
            })
            .collect();
        Vocabulary { fields }
    }

    /// A single-field vocabulary with explicit weights.
    pub fn single(name: &str, department: &str, topics: &[(&str, f64)]) -> Vocabulary {
        Vocabulary {
            fields: vec![Field {
                name: name.to_string(),
                department: department.to_string(),
                topics: topics.iter().map(|(t, w)| (t.to_string(), *w)).collect(),
            }],
        }
    }

    pub fn topic_count(&self) -> usize {
        self.fields.iter().map(|f| f.topics.len()).sum()
    }

    /// Index of the field that lists `topic`, if any.
    pub fn field_of(&self, topic: &str) -> Option<usize> {
        self.fields
            .iter()
            .position(|f| f.topics.iter().any(|(t, _)| t == topic))
    }
}

/// Profile count of the desk-scale corpus.
pub const DESK_SCALE_PROFILES: usize = 54_000;

/// Knobs for [`synth_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub vocabulary: Vocabulary,
    pub universities: usize,
    /// Fraction of profiles with one topic replaced by a plural variant.
    pub variant_fraction: f64,
    /// Fraction of profiles with one multi-word topic written in reversed token order.
    pub permuted_fraction: f64,
    /// Fraction of profiles where two topics are joined with "and".
    pub conjunction_fraction: f64,
    /// Fraction of profiles whose raw field carries markup or odd casing.
    pub noise_fraction: f64,
    /// Probability that a topic is drawn from the home field.
    pub home_field_bias: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocabulary: Vocabulary::generated(120),
            universities: 40,
            variant_fraction: 0.2,
            permuted_fraction: 0.05,
            conjunction_fraction: 0.05,
            noise_fraction: 0.1,
            home_field_bias: 0.85,
        }
    }
}

impl SynthSpec {
    /// Settings whose graph, with [`DESK_SCALE_PROFILES`] profiles and
    /// thresholds of 4 researchers per topic and 2 per edge, has roughly six
    /// thousand topics and twenty-six thousand co-occurrence edges.
    pub fn desk_scale() -> SynthSpec {
        SynthSpec {
            vocabulary: Vocabulary::generated(420),
            universities: 200,
            variant_fraction: 0.1,
            permuted_fraction: 0.02,
            conjunction_fraction: 0.03,
            noise_fraction: 0.05,
            home_field_bias: 0.88,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionKind {
    Plural,
    Permuted,
}

/// Record of one deliberately injected variant form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub researcher_id: String,
    pub kind: InjectionKind,
    pub original: String,
    pub variant: String,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub injections: Vec<Injection>,
}

const FIRST_NAMES: &[&str] = &[
    "Ada",
    "Alan",
    "Grace",
    "Edsger",
    "Barbara",
    "Donald",
    "Frances",
    "John",
    "Radia",
    "Leslie",
    "Shafi",
    "Tim",
    "Katherine",
    "Claude",
    "Marie",
    "Emmy",
];
const LAST_NAMES: &[&str] = &[
    "Lovelace",
    "Turing",
    "Hopper",
    "Dijkstra",
    "Liskov",
    "Knuth",
    "Allen",
    "McCarthy",
    "Perlman",
    "Lamport",
    "Goldwasser",
    "Berners",
    "Johnson",
    "Shannon",
    "Curie",
    "Noether",
];
const TITLES: &[&str] = &[
    "Professor of",
    "Associate Professor of",
    "Assistant Professor of",
    "Lecturer in",
    "PhD student,",
    "Research Scientist,",
    "Postdoctoral Fellow,",
];

/// Generates a corpus that is a pure function of `(seed, n_profiles, spec)`.
pub fn synth_corpus(seed: u64, n_profiles: usize, spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universities = synth_universities(spec.universities.max(1));

    let fields = &spec.vocabulary.fields;
    let field_weights: Vec<f64> = fields
        .iter()
        .map(|f| f.topics.iter().map(|(_, w)| w).sum::<f64>().max(1e-12))
        .collect();
    let field_pick =
        WeightedAliasIndex::new(field_weights).expect("vocabulary has at least one field");
    let topic_picks: Vec<Option<WeightedAliasIndex<f64>>> = fields
        .iter()
        .map(|f| WeightedAliasIndex::new(f.topics.iter().map(|(_, w)| *w).collect()).ok())
        .collect();
    let cites = LogNormal::<f64>::new(5.5, 1.6).expect("valid parameters");
    let topic_counts = WeightedAliasIndex::new(vec![0.12, 0.2, 0.28, 0.24, 0.16]).unwrap();

    let mut profiles = Vec::with_capacity(n_profiles);
    let mut injections = Vec::new();
    for i in 0..n_profiles {
        let id = format!("r{i}");
        let home = field_pick.sample(&mut rng);
        let want = topic_counts.sample(&mut rng) + 1;
        let mut topics: Vec<String> = Vec::with_capacity(want);
        let mut attempts = 0;
        while topics.len() < want && attempts < 50 {
            attempts += 1;
            let f = if rng.random_bool(spec.home_field_bias) {
                home
            } else {
                field_pick.sample(&mut rng)
            };
            let Some(pick) = &topic_picks[f] else {
                continue;
            };
            let t = &fields[f].topics[pick.sample(&mut rng)].0;
            if !topics.contains(t) {
                topics.push(t.clone());
            }
        }

        if rng.random_bool(spec.variant_fraction) {
            let candidates: Vec<usize> = (0..topics.len())
                .filter(|&k| pluralize(&topics[k]).is_some())
                .collect();
            if let Some(&k) = candidates.choose(&mut rng) {
                let original = topics[k].clone();
                let variant = pluralize(&original).expect("filtered above");
                topics[k] = variant.clone();
                injections.push(Injection {
                    researcher_id: id.clone(),
                    kind: InjectionKind::Plural,
                    original,
                    variant,
                });
            }
        }
        if rng.random_bool(spec.permuted_fraction) {
            let multi: Vec<usize> = (0..topics.len())
                .filter(|&k| topics[k].contains(' '))
                .collect();
            if let Some(&k) = multi.choose(&mut rng) {
                let original = topics[k].clone();
                let variant = original.split(' ').rev().collect::<Vec<_>>().join(" ");
                if variant != original {
                    topics[k] = variant.clone();
                    injections.push(Injection {
                        researcher_id: id.clone(),
                        kind: InjectionKind::Permuted,
                        original,
                        variant,
                    });
                }
            }
        }

        let raw_topics = render_raw(&mut rng, &topics, spec);
        let uni = &universities[rng.random_range(0..universities.len())];
        let title = TITLES.choose(&mut rng).unwrap();
        let affiliation = format!("{title} {}, {}", fields[home].department, uni.name);
        let name = format!(
            "{} {}",
            FIRST_NAMES.choose(&mut rng).unwrap(),
            LAST_NAMES.choose(&mut rng).unwrap()
        );
        profiles.push(ResearcherProfile {
            researcher_id: id,
            name,
            university_id: uni.university_id.clone(),
            total_citations: cites.sample(&mut rng).floor() as u64,
            affiliation,
            raw_topics,
            topics: Vec::new(),
        });
    }
    let corpus = Corpus::new(profiles, universities).expect("synthetic ids are unique and resolve");
    SynthCorpus { corpus, injections }
}

fn synth_universities(n: usize) -> Vec<University> {
    (0..n)
        .map(|i| {
            let region = match i % 20 {
                0..=7 => Region::Us,
                8..=14 => Region::Eu,
                _ => Region::Other,
            };
            University {
                university_id: format!("u{i}"),
                name: format!("University {i}"),
                region,
                academic_staff: Some(500 + (i as u64 * 7919) % 4000),
            }
        })
        .collect()
}

/// Plural of the last token, or `None` when it already ends in "s".
fn pluralize(topic: &str) -> Option<String> {
    if topic.ends_with('s') {
        None
    } else if topic.ends_with('y') && !topic.ends_with("ey") && !topic.ends_with("ay") {
        Some(format!("{}ies", &topic[..topic.len() - 1]))
    } else {
        Some(format!("{topic}s"))
    }
}

fn render_raw(rng: &mut ChaCha8Rng, topics: &[String], spec: &SynthSpec) -> String {
    let mut pieces: Vec<String> = topics.to_vec();
    if pieces.len() >= 2 && rng.random_bool(spec.conjunction_fraction) {
        let b = pieces.remove(1);
        let conj = if rng.random_bool(0.8) { "and" } else { "or" };
        pieces[0] = format!("{} {conj} {b}", pieces[0]);
    }
    let noisy = rng.random_bool(spec.noise_fraction);
    if noisy {
        for p in pieces.iter_mut() {
            match rng.random_range(0..3) {
                0 => *p = title_case(p),
                1 => *p = format!("<b>{p}</b>"),
                _ => *p = format!("  {p}\t"),
            }
        }
    }
    let mut out = String::new();
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 {
            let sep = if noisy {
                *[", ", "; ", " / ", " # "].choose(rng).unwrap()
            } else {
                ", "
            };
            out.push_str(sep);
        }
        out.push_str(p);
    }
    out
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
