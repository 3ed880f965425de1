#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uep/autoencoder.hpp"
#include "uep/baselines.hpp"
#include "uep/montecarlo.hpp"

namespace uep {

enum class ExperimentMode {
    ae_message_wise,
    ae_bit_wise,
    ae_progressive,
    baseline_coset,
    baseline_superposition,
};

const char* to_string(ExperimentMode m);
bool is_ae_mode(ExperimentMode m);

// Thrown for schema violations; message carries the JSON path or line info.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainSection {
    double ebn0_db = 3.0;
    std::size_t batch_size = 256;
    std::size_t num_iterations = 20000;
    std::vector<std::size_t> encoder_hidden{16};
    std::vector<std::size_t> decoder_hidden{16};
    AdamHyper adam;
};

// Companion random-ensemble scatter attached to an AE run, so one config can
// produce both the trade-off curve and the baseline cloud it is compared to.
struct BaselineSection {
    ExperimentMode mode = ExperimentMode::baseline_coset;
    std::vector<unsigned> bit_lengths;  // coset: k_i per class; superposition: {k1, k2}
    std::size_t num_codes = 200;
    std::vector<double> mu_grid;  // superposition only
    SuperpositionSpec::Normalization normalization =
        SuperpositionSpec::Normalization::per_codeword;
};

struct ExperimentConfig {
    int schema_version = 1;
    ExperimentMode mode = ExperimentMode::ae_message_wise;
    std::uint64_t seed = 1;
    std::size_t n = 7;
    std::vector<std::size_t> class_sizes;  // ae_message_wise
    std::vector<unsigned> bit_lengths;     // bit-wise modes and baselines
    std::vector<double> lambda_grid;       // AE modes
    std::vector<double> mu_grid;           // baseline_superposition
    std::vector<double> snr_grid_db;
    TrainSection train;
    StoppingRule stopping;
    BitwiseLossForm bitwise_form = BitwiseLossForm::literal;
    std::size_t num_codes = 200;  // baseline modes
    SuperpositionSpec::Normalization normalization =
        SuperpositionSpec::Normalization::per_codeword;
    std::optional<BaselineSection> baseline;
    std::string output = "results";

    ClassPartition partition() const;  // for the primary mode
};

// Strict parse: unknown keys anywhere are hard errors, as are missing
// required keys, empty grids, and mode/field mismatches.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin);

// One output row: a grid point evaluated at one SNR. Float columns are
// printed with 10 significant digits; counters are exact integers.
struct ResultRow {
    std::string mode;
    std::size_t grid_index = 0;
    double param = std::numeric_limits<double>::quiet_NaN();  // lambda or mu; NaN -> empty cell
    ErrorProfile profile;
    ClassPartition partition;

    double avg_error() const { return average_error(profile, partition); }
};

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os);

// Parsed CSV row; floats survive an emit/parse/emit cycle byte-identically.
struct CsvRow {
    std::string mode;
    std::size_t grid_index = 0;
    double param = std::numeric_limits<double>::quiet_NaN();
    double ebn0_db = 0.0;
    double avg_error = 0.0;
    std::uint64_t total_trials = 0;
    std::uint64_t message_errors = 0;
    bool ci_limited = false;
    std::uint64_t seed = 0;
    std::uint64_t code_digest = 0;
    std::vector<double> p, lo, hi;
    std::vector<ClassCount> classes;
};

std::vector<CsvRow> parse_csv(std::istream& is);
void emit_csv(const std::vector<CsvRow>& rows, std::ostream& os);

struct DominanceReport {
    // Per AE point: is it dominated by any baseline point?
    std::vector<bool> ae_point_dominated;
    // Every baseline frontier point strictly dominated by some AE point
    // (vacuously true for an empty baseline).
    bool ae_frontier_dominates_baseline = false;
    std::vector<std::pair<double, double>> ae_frontier;
    std::vector<std::pair<double, double>> baseline_frontier;
};

DominanceReport compare_frontiers(const std::vector<std::pair<double, double>>& ae_points,
                                  const std::vector<std::pair<double, double>>& baseline_points);

struct RunOptions {
    std::string out_dir;  // overrides config.output when nonempty
    std::optional<std::uint64_t> seed;
    int jobs = 0;  // 0 = library default
    Execution exec = Execution::openmp;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::string out_dir;
};

// Executes the configured pipeline and writes results.csv, results.json,
// manifest.json, loss_trace.csv (AE modes), codebook and model exports, and
// report.json when a baseline section is present. Deterministic output for a
// fixed (config, seed): rerunning reproduces results.csv byte for byte.
RunOutput run_experiment(const ExperimentConfig& config, const RunOptions& options);

}  // namespace uep
