#pragma once

#include "nnquad/network.hpp"
#include "nnquad/piecewise.hpp"
#include "nnquad/trainer.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnquad {

// Builtin target: f(x) = cos x - x^2 + 4 - 1/(x + 1) and its antiderivative
// F(x) = sin x - x^3/3 + 4x - ln(x + 1), F(0) = 0.
double paperfn(double x);
double paperfn_antiderivative(double x);

enum class BaselineInput { interpolant, true_function };

struct ExperimentConfig {
    // "paperfn", or empty when samples_csv is set.
    std::string target = "paperfn";
    std::string samples_csv;  // columns x,f with uniformly spaced x
    double lo = 0.0;
    double hi = 5.0;
    std::size_t samples = 51;
    TrainConfig train;
    std::size_t partition = 51;
    Representative mode = Representative::midpoint;
    std::vector<std::string> baselines{"euler", "rk45"};
    BaselineInput baseline_input = BaselineInput::interpolant;
    double rk45_rel_tol = 1e-3;
    double rk45_abs_tol = 1e-6;
    std::string network;  // load instead of training when set
    std::string output_dir = "nnquad_out";

    bool has_baseline(std::string_view name) const;
};

// Parses a JSON experiment config. Relative paths are resolved against `base_dir`.
// Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);

struct SampleSet {
    std::vector<double> x;
    std::vector<double> y;
};

// The (x_i, f(x_i)) pairs the network is trained on and the baselines consume.
SampleSet experiment_samples(const ExperimentConfig& cfg);

struct CompareReport {
    Network network;
    std::vector<double> train_losses;  // empty when the network was loaded
    std::vector<double> x;             // sample grid
    std::vector<double> f;             // target samples
    std::vector<double> psi;           // network at the grid
    std::optional<std::vector<double>> exact;  // F(x) - F(x_0), builtin target only
    std::vector<double> nn;
    std::optional<std::vector<double>> euler;
    std::optional<std::vector<double>> rk45;
};

// Trains (or loads) the network and evaluates every estimator on the sample grid.
CompareReport run_compare(const ExperimentConfig& cfg);

// Decimal with 17 significant digits.
std::string format_double(double x);

// Command-line entry point: train | integrate | compare | info.
// Exit codes: 0 ok, 2 usage/config, 3 training failure, 4 unsupported model.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nnquad
