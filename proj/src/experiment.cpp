#include "nnquad/experiment.hpp"

#include "nnquad/baselines.hpp"
#include "nnquad/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nnquad {

double paperfn(double x) { return std::cos(x) - x * x + 4.0 - 1.0 / (x + 1.0); }

double paperfn_antiderivative(double x) {
    return std::sin(x) - x * x * x / 3.0 + 4.0 * x - std::log(x + 1.0);
}

bool ExperimentConfig::has_baseline(std::string_view name) const {
    return std::find(baselines.begin(), baselines.end(), name) != baselines.end();
}

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute())
        return path;
    return (std::filesystem::path(base_dir) / path).string();
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(std::string("cannot read ") + what + " '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::string& base_dir) {
    using json = nlohmann::json;
    json j;
    try {
        j = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");

    ExperimentConfig cfg;
    auto count = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number_unsigned())
            throw ConfigError("'" + key + "' must be a non-negative integer");
        return v.get<std::size_t>();
    };
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "target") {
                cfg.target = value.get<std::string>();
            } else if (key == "samples_csv") {
                cfg.samples_csv = resolve(value.get<std::string>(), base_dir);
                cfg.target.clear();
            } else if (key == "interval") {
                const auto iv = value.get<std::vector<double>>();
                if (iv.size() != 2)
                    throw ConfigError("interval must be [lo, hi]");
                cfg.lo = iv[0];
                cfg.hi = iv[1];
            } else if (key == "samples") {
                cfg.samples = count(value, key);
            } else if (key == "train") {
                cfg.train = parse_train_config(value.dump());
            } else if (key == "partition") {
                cfg.partition = count(value, key);
            } else if (key == "mode") {
                const auto m = value.get<std::string>();
                if (m == "left")
                    cfg.mode = Representative::left;
                else if (m == "midpoint")
                    cfg.mode = Representative::midpoint;
                else
                    throw ConfigError("mode must be 'left' or 'midpoint'");
            } else if (key == "baselines") {
                cfg.baselines = value.get<std::vector<std::string>>();
            } else if (key == "baseline_input") {
                const auto b = value.get<std::string>();
                if (b == "interpolant")
                    cfg.baseline_input = BaselineInput::interpolant;
                else if (b == "true")
                    cfg.baseline_input = BaselineInput::true_function;
                else
                    throw ConfigError("baseline_input must be 'interpolant' or 'true'");
            } else if (key == "rk45_rtol") {
                cfg.rk45_rel_tol = value.get<double>();
            } else if (key == "rk45_atol") {
                cfg.rk45_abs_tol = value.get<double>();
            } else if (key == "network") {
                cfg.network = resolve(value.get<std::string>(), base_dir);
            } else if (key == "output_dir") {
                cfg.output_dir = resolve(value.get<std::string>(), base_dir);
            } else {
                throw ConfigError("config: unknown field '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (cfg.samples_csv.empty() && cfg.target != "paperfn")
        throw ConfigError("config: target must be 'paperfn' or samples_csv must be given");
    if (!(cfg.lo < cfg.hi))
        throw ConfigError("config: interval must be nonempty");
    if (cfg.samples < 2)
        throw ConfigError("config: samples must be >= 2");
    if (cfg.partition < 2)
        throw ConfigError("config: partition must be >= 2");
    for (const auto& b : cfg.baselines)
        if (b != "euler" && b != "rk45")
            throw ConfigError("config: unknown baseline '" + b + "'");
    if (!cfg.samples_csv.empty() && cfg.baseline_input == BaselineInput::true_function)
        throw ConfigError("config: baseline_input 'true' needs the builtin target");
    if (!(cfg.rk45_rel_tol > 0.0) || !(cfg.rk45_abs_tol > 0.0))
        throw ConfigError("config: rk45 tolerances must be positive");
    if (cfg.train.layer_widths.front() != 1 || cfg.train.layer_widths.back() != 1)
        throw ConfigError("config: the experiment network maps a scalar to a scalar");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const std::string text = slurp(path, "config");
    return parse_experiment_config(text, std::filesystem::path(path).parent_path().string());
}

SampleSet experiment_samples(const ExperimentConfig& cfg) {
    SampleSet s;
    if (cfg.samples_csv.empty()) {
        s.x = Partition::uniform(cfg.lo, cfg.hi, cfg.samples).points();
        for (double x : s.x)
            s.y.push_back(paperfn(x));
        return s;
    }
    std::istringstream in(slurp(cfg.samples_csv, "samples csv"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || (lineno == 1 && !std::isdigit(static_cast<unsigned char>(line[0])) &&
                             line[0] != '-' && line[0] != '.' && line[0] != '+'))
            continue;  // header or blank
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("samples csv line " + std::to_string(lineno) + ": expected x,f");
        try {
            std::size_t used = 0;
            const std::string xs = line.substr(0, comma);
            const std::string ys = line.substr(comma + 1);
            const double x = std::stod(xs, &used);
            if (used != xs.size())
                throw std::invalid_argument("x");
            const double y = std::stod(ys, &used);
            if (used != ys.size())
                throw std::invalid_argument("f");
            s.x.push_back(x);
            s.y.push_back(y);
        } catch (const std::exception&) {
            throw ConfigError("samples csv line " + std::to_string(lineno) + ": bad number");
        }
    }
    if (s.x.size() < 2)
        throw ConfigError("samples csv needs at least two rows");
    const double h = (s.x.back() - s.x.front()) / static_cast<double>(s.x.size() - 1);
    for (std::size_t i = 1; i < s.x.size(); ++i) {
        if (!(s.x[i] > s.x[i - 1]))
            throw ConfigError("samples csv: x must be strictly increasing");
        if (std::fabs((s.x[i] - s.x[i - 1]) - h) > 1e-9 * std::max(1.0, std::fabs(h)))
            throw ConfigError("samples csv: x must be uniformly spaced");
    }
    return s;
}

CompareReport run_compare(const ExperimentConfig& cfg) {
    const SampleSet samples = experiment_samples(cfg);
    const double lo = samples.x.front();
    const double hi = samples.x.back();

    std::optional<Network> loaded;
    std::vector<double> losses;
    if (!cfg.network.empty()) {
        loaded = load_network_file(cfg.network);
    } else {
        Dataset data;
        for (std::size_t i = 0; i < samples.x.size(); ++i) {
            data.inputs.push_back(Vector{samples.x[i]});
            data.targets.push_back(Vector{samples.y[i]});
        }
        TrainResult trained = train(cfg.train, data);
        loaded = std::move(trained.network);
        losses = std::move(trained.losses);
    }
    const Network& net = *loaded;
    require_relu(net);
    if (net.input_dim() != 1 || net.output_dim() != 1)
        throw StructuralError("compare needs a scalar-to-scalar network");

    // Partition: the sample grid merged with `partition` uniform points.
    std::vector<double> pts = samples.x;
    const auto extra = Partition::uniform(lo, hi, cfg.partition).points();
    pts.insert(pts.end(), extra.begin(), extra.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const Partition part(pts, cfg.mode);
    const CorrectedIntegral ci = corrected_integral(net, LineSegment::scalar(lo, hi), part);

    CompareReport rep{net, std::move(losses), samples.x, samples.y, {}, {}, {}, {}, {}};
    for (double x : samples.x) {
        rep.psi.push_back(forward(net, Vector{x})[0]);
        const auto it = std::lower_bound(pts.begin(), pts.end(), x);
        rep.nn.push_back(ci.samples[static_cast<std::size_t>(it - pts.begin())][0]);
    }
    if (cfg.samples_csv.empty()) {
        std::vector<double> exact;
        const double f0 = paperfn_antiderivative(lo);
        for (double x : samples.x)
            exact.push_back(paperfn_antiderivative(x) - f0);
        rep.exact = std::move(exact);
    }

    const SampledFunction interp(samples.x, samples.y);
    const ScalarFn f = cfg.baseline_input == BaselineInput::interpolant
                           ? ScalarFn([&interp](double x) { return interp(x); })
                           : ScalarFn(paperfn);
    if (cfg.has_baseline("euler"))
        rep.euler = euler_integrate(f, lo, hi, samples.x.size() - 1).value;
    if (cfg.has_baseline("rk45")) {
        Rk45Options opt;
        opt.rel_tol = cfg.rk45_rel_tol;
        opt.abs_tol = cfg.rk45_abs_tol;
        opt.output_points = samples.x;
        rep.rk45 = rk45_integrate(f, lo, hi, opt).curve.value;
    }
    return rep;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace nnquad
