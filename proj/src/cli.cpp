#include "nnquad/closed_form.hpp"
#include "nnquad/errors.hpp"
#include "nnquad/experiment.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace nnquad {

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kTrainingFailed = 3;
constexpr int kUnsupported = 4;

// Maps library errors onto the exit-code contract.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const TrainingDiverged& e) {
        err << "error: " << e.what() << '\n';
        return kTrainingFailed;
    } catch (const UnsupportedActivation& e) {
        err << "error: " << e.what() << '\n';
        return kUnsupported;
    } catch (const UnsupportedOrder& e) {
        err << "error: " << e.what() << '\n';
        return kUnsupported;
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << '\n';
        return kUnsupported;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

std::string output_dir(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("NNQUAD_OUT"); env && *env)
        return env;
    return cfg.output_dir;
}

class CsvFile {
public:
    CsvFile(const std::string& path, const std::vector<std::string>& header) {
        out_.open(path, std::ios::binary);
        if (!out_)
            throw Error("cannot write '" + path + "'");
        row_strings(header);
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

std::string join(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_train_log(const std::string& path, const std::vector<double>& losses) {
    CsvFile csv(path, {"epoch", "loss"});
    for (std::size_t e = 0; e < losses.size(); ++e)
        csv.row_strings({std::to_string(e), format_double(losses[e])});
}

int cmd_train(const std::string& config_path, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const SampleSet samples = experiment_samples(cfg);
    Dataset data;
    for (std::size_t i = 0; i < samples.x.size(); ++i) {
        data.inputs.push_back(Vector{samples.x[i]});
        data.targets.push_back(Vector{samples.y[i]});
    }
    const TrainResult res = train(cfg.train, data);
    const std::string dir = output_dir(cfg);
    std::filesystem::create_directories(dir);
    save_network_file(res.network, join(dir, "network.json"));
    write_train_log(join(dir, "train_log.csv"), res.losses);
    out << "final_loss " << format_double(res.losses.back()) << '\n';
    out << "wrote " << join(dir, "network.json") << '\n';
    return kOk;
}

std::vector<double> parse_base(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw ConfigError("--base: '" + item + "' is not a number");
        v.push_back(x);
    }
    return v;
}

struct IntegrateArgs {
    std::string network;
    double a = 0.0;
    double b = 0.0;
    std::size_t coord = 0;
    std::string base;
    std::size_t partition = 101;
    std::string mode = "midpoint";
    std::string out;
    bool closed_form = false;
};

int cmd_integrate(const IntegrateArgs& args, std::ostream& out) {
    const Network net = load_network_file(args.network);
    if (!(args.a <= args.b))
        throw ConfigError("--a must not exceed --b");
    if (args.partition < 2)
        throw ConfigError("--partition must be >= 2");
    const Representative mode =
        args.mode == "left" ? Representative::left : Representative::midpoint;
    const Partition part = Partition::uniform(args.a, args.b, args.partition, mode);

    std::vector<double> zs;
    std::vector<Vector> values;
    if (args.closed_form) {
        if (args.coord != 0 || !args.base.empty())
            throw StructuralError("--closed-form integrates scalar-input networks only");
        for (double z : part.points()) {
            zs.push_back(z);
            values.push_back(integrate_one_layer_interval(net, args.a, z));
        }
    } else {
        require_relu(net);
        LineSegment seg;
        seg.base = args.base.empty() ? Vector(net.input_dim(), 0.0) : Vector(parse_base(args.base));
        seg.coord = args.coord;
        seg.lo = args.a;
        seg.hi = args.b;
        if (seg.base.size() != net.input_dim())
            throw ConfigError("--base needs " + std::to_string(net.input_dim()) + " values");
        if (seg.coord >= net.input_dim())
            throw ConfigError("--coord out of range");
        for (auto& p : antiderivative_curve(net, seg, part)) {
            zs.push_back(p.z);
            values.push_back(std::move(p.value));
        }
    }

    if (!args.out.empty()) {
        std::vector<std::string> header{"z"};
        if (net.output_dim() == 1)
            header.emplace_back("F_hat");
        else
            for (std::size_t r = 0; r < net.output_dim(); ++r)
                header.push_back("F_hat_" + std::to_string(r));
        CsvFile csv(args.out, header);
        for (std::size_t k = 0; k < zs.size(); ++k) {
            std::vector<double> row{zs[k]};
            row.insert(row.end(), values[k].begin(), values[k].end());
            csv.row(row);
        }
    }
    for (double v : values.back())
        out << format_double(v) << '\n';
    return kOk;
}

int cmd_compare(const std::string& config_path, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const CompareReport rep = run_compare(cfg);
    const std::string dir = output_dir(cfg);
    std::filesystem::create_directories(dir);

    if (cfg.network.empty()) {
        save_network_file(rep.network, join(dir, "network.json"));
        write_train_log(join(dir, "train_log.csv"), rep.train_losses);
    }
    {
        CsvFile fit(join(dir, "fit.csv"), {"x", "f", "psi"});
        for (std::size_t i = 0; i < rep.x.size(); ++i)
            fit.row({rep.x[i], rep.f[i], rep.psi[i]});
    }
    {
        std::vector<std::string> header{"x"};
        if (rep.exact)
            header.emplace_back("F");
        header.emplace_back("F_nn");
        if (rep.euler)
            header.emplace_back("F_euler");
        if (rep.rk45)
            header.emplace_back("F_rk45");
        CsvFile est(join(dir, "estimates.csv"), header);
        for (std::size_t i = 0; i < rep.x.size(); ++i) {
            std::vector<double> row{rep.x[i]};
            if (rep.exact)
                row.push_back((*rep.exact)[i]);
            row.push_back(rep.nn[i]);
            if (rep.euler)
                row.push_back((*rep.euler)[i]);
            if (rep.rk45)
                row.push_back((*rep.rk45)[i]);
            est.row(row);
        }
    }

    struct Method {
        const char* name;
        const std::vector<double>* values;
    };
    std::vector<Method> methods{{"nn", &rep.nn}};
    if (rep.euler)
        methods.push_back({"euler", &*rep.euler});
    if (rep.rk45)
        methods.push_back({"rk45", &*rep.rk45});

    if (rep.exact) {
        std::vector<std::string> header{"x"};
        for (const auto& m : methods)
            header.push_back(std::string("err_") + m.name);
        CsvFile err(join(dir, "error_curve.csv"), header);
        for (std::size_t i = 0; i < rep.x.size(); ++i) {
            std::vector<double> row{rep.x[i]};
            for (const auto& m : methods)
                row.push_back(std::fabs((*rep.exact)[i] - (*m.values)[i]));
            err.row(row);
        }
    }

    {
        CsvFile summary(join(dir, "summary.csv"), rep.exact
                                                      ? std::vector<std::string>{"method", "F_hat_end", "F_end", "abs_error_end"}
                                                      : std::vector<std::string>{"method", "F_hat_end"});
        out << "method      F_hat(end)";
        if (rep.exact)
            out << "               |F - F_hat|(end)";
        out << '\n';
        for (const auto& m : methods) {
            const double end = m.values->back();
            char line[160];
            if (rep.exact) {
                const double exact_end = rep.exact->back();
                const double e = std::fabs(exact_end - end);
                summary.row_strings({m.name, format_double(end), format_double(exact_end), format_double(e)});
                std::snprintf(line, sizeof line, "%-10s  %-24s %s\n", m.name, format_double(end).c_str(),
                              format_double(e).c_str());
            } else {
                summary.row_strings({m.name, format_double(end)});
                std::snprintf(line, sizeof line, "%-10s  %s\n", m.name, format_double(end).c_str());
            }
            out << line;
        }
    }
    out << "wrote reports to " << dir << '\n';
    return kOk;
}

void describe(std::ostream& out, const InnerLayer& layer, const std::string& label) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        out << "  " << label << " dense " << d->weight.cols() << " -> " << d->weight.rows() << ' '
            << to_string(d->activation) << '\n';
        return;
    }
    const auto& c = std::get<ConvLayer>(layer);
    auto shape = [](const ConvShape& s) {
        std::string r;
        for (std::size_t i = 0; i < s.size(); ++i)
            r += (i ? "x" : "") + std::to_string(s[i]);
        return r;
    };
    out << "  " << label << " conv " << shape(c.input_shape()) << " -> " << shape(c.output_shape())
        << " kernel " << c.kernel().rows() << "x" << c.kernel().cols() << " stride " << c.stride()
        << " padding " << c.padding() << ' ' << to_string(c.activation()) << '\n';
}

int cmd_info(const std::string& path, std::ostream& out) {
    const Network net = load_network_file(path);
    out << "input_dim: " << net.input_dim() << '\n';
    out << "output_dim: " << net.output_dim() << '\n';
    out << "layers:\n";
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string label = std::to_string(i + 1);
        if (const auto* block = std::get_if<ResidualBlock>(&layers[i])) {
            out << "  " << label << " residual\n";
            for (std::size_t j = 0; j < block->layers.size(); ++j)
                describe(out, block->layers[j], "  " + label + "." + std::to_string(j + 1));
        } else if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
            describe(out, *d, label);
        } else {
            describe(out, std::get<ConvLayer>(layers[i]), label);
        }
    }
    out << "parameters: " << net.parameter_count() << '\n';
    out << "piecewise_linear: " << (net.is_relu() ? "yes" : "no") << '\n';
    out << "valid: yes\n";
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Integrals of trained neural networks", "nnquad"};
    app.require_subcommand(1);

    std::string train_config;
    auto* train_cmd = app.add_subcommand("train", "Train a network on the configured target");
    train_cmd->add_option("config", train_config, "Experiment config (JSON)")->required();

    IntegrateArgs iargs;
    auto* integrate_cmd = app.add_subcommand("integrate", "Integrate a network along one coordinate");
    integrate_cmd->add_option("network", iargs.network, "Weight file (JSON)")->required();
    integrate_cmd->add_option("--a", iargs.a, "Lower bound")->required();
    integrate_cmd->add_option("--b", iargs.b, "Upper bound")->required();
    integrate_cmd->add_option("--coord", iargs.coord, "Integration coordinate");
    integrate_cmd->add_option("--base", iargs.base, "Comma-separated base point for the other coordinates");
    integrate_cmd->add_option("--partition", iargs.partition, "Number of uniform partition points");
    integrate_cmd->add_option("--mode", iargs.mode, "Representative point")
        ->check(CLI::IsMember({"left", "midpoint"}));
    integrate_cmd->add_option("--out", iargs.out, "Write the antiderivative curve as CSV");
    integrate_cmd->add_flag("--closed-form", iargs.closed_form,
                            "Exact integral of a one-hidden-layer network (any activation)");

    std::string compare_config;
    auto* compare_cmd = app.add_subcommand("compare", "Compare the network integral with baselines");
    compare_cmd->add_option("config", compare_config, "Experiment config (JSON)")->required();

    std::string info_path;
    auto* info_cmd = app.add_subcommand("info", "Print network shape and validation status");
    info_cmd->add_option("network", info_path, "Weight file (JSON)")->required();

    std::vector<std::string> argv_storage{"nnquad"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    if (*train_cmd)
        return guarded(err, [&] { return cmd_train(train_config, out); });
    if (*integrate_cmd)
        return guarded(err, [&] { return cmd_integrate(iargs, out); });
    if (*compare_cmd)
        return guarded(err, [&] { return cmd_compare(compare_config, out); });
    return guarded(err, [&] { return cmd_info(info_path, out); });
}

}  // namespace nnquad
