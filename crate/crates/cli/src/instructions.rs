//! Download and preparation instructions for the benchmark datasets.
//! Datasets are never bundled; the expected row/column counts double as
//! integrity checks after preprocessing.

pub struct DatasetInfo {
    pub id: &'static str,
    pub file: &'static str,
    pub schema: &'static str,
    pub source: &'static str,
    pub prep: &'static str,
    /// Rows after ingestion (missing-value rows dropped).
    pub expected_rows: usize,
    /// Binary/numeric columns after dummy expansion, including the target.
    pub expected_cols: usize,
}

pub const DATASETS: &[DatasetInfo] = &[
    DatasetInfo {
        id: "adult",
        file: "data/adult.csv",
        schema: "schemas/adult.toml",
        source: "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/ (adult.data, adult.test)",
        prep: "Concatenate the two splits, drop the stub first line of adult.test and the \
               trailing period on its labels:\n\
               \x20 cat adult.data <(tail -n +2 adult.test | sed 's/\\.$//') | grep -v '^\\s*$' > data/adult.csv",
        expected_rows: 45_222,
        expected_cols: 49,
    },
    DatasetInfo {
        id: "candc",
        file: "data/communities.data",
        schema: "schemas/communities.toml",
        source: "http://archive.ics.uci.edu/ml/datasets/communities+and+crime (communities.data)",
        prep: "Use the raw comma-separated file as downloaded:\n\
               \x20 cp communities.data data/communities.data",
        expected_rows: 1_994,
        expected_cols: 101,
    },
    DatasetInfo {
        id: "german",
        file: "data/german.csv",
        schema: "schemas/german.toml",
        source: "https://archive.ics.uci.edu/ml/datasets/Statlog+(German+Credit+Data) (german.data)",
        prep: "Convert the space-separated file to CSV:\n\
               \x20 tr -s ' ' ',' < german.data > data/german.csv",
        expected_rows: 1_000,
        expected_cols: 47,
    },
    DatasetInfo {
        id: "compas",
        file: "data/compas.csv",
        schema: "schemas/compas.toml",
        source: "https://github.com/propublica/compas-analysis (compas-scores-two-years.csv)",
        prep: "Apply the standard screening-window filter, e.g. with python/pandas:\n\
               \x20 df = pd.read_csv('compas-scores-two-years.csv')\n\
               \x20 df = df[(df.days_b_screening_arrest <= 30) & (df.days_b_screening_arrest >= -30)\n\
               \x20         & (df.is_recid != -1) & (df.c_charge_degree != 'O')]\n\
               \x20 df.to_csv('data/compas.csv', index=False)",
        expected_rows: 5_855,
        expected_cols: 12,
    },
    DatasetInfo {
        id: "lsac",
        file: "data/lsac.csv",
        schema: "schemas/lsac.toml",
        source: "http://www2.law.ucla.edu/sander/Systemic/Data.htm (law school bar passage study; \
                 commonly circulated as bar_pass_prediction.csv)",
        prep: "Export the survey to CSV with integer-coded categoricals and place it at \
               data/lsac.csv; rows with blanks in the used columns are dropped at load time.",
        expected_rows: 20_798,
        expected_cols: 24,
    },
];

pub fn dataset_info(id: &str) -> Option<&'static DatasetInfo> {
    let id = match id {
        "communities" | "communities-and-crime" | "c&c" => "candc",
        other => other,
    };
    DATASETS.iter().find(|d| d.id == id)
}

/// Resolve a schema name (as stored in the schema file) to its dataset info.
pub fn dataset_info_by_schema_name(name: &str) -> Option<&'static DatasetInfo> {
    match name {
        "communities" => dataset_info("candc"),
        other => dataset_info(other),
    }
}

pub fn instructions_text(info: &DatasetInfo) -> String {
    format!(
        "dataset: {}\n\
         source:  {}\n\
         prep:\n{}\n\
         place the prepared file at: {}\n\
         schema:  {}\n\
         integrity check after ingestion: {} rows, {} expanded columns (including the target)\n",
        info.id, info.source, info.prep, info.file, info.schema, info.expected_rows, info.expected_cols
    )
}
