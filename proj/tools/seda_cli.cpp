#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "seda/classify.hpp"
#include "seda/dataio.hpp"
#include "seda/simulate.hpp"
#include "seda/theory.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open " + path);
    out << text;
}

// Binary split of a dataset by label order of first appearance.
struct BinarySplit {
    Eigen::MatrixXd X1, X2;
    std::string class1, class2;
};

BinarySplit binary_split(const seda::Dataset& data) {
    const auto classes = data.classes();
    if (classes.size() != 2)
        throw std::invalid_argument("expected exactly 2 classes, found " +
                                    std::to_string(classes.size()));
    return {data.rows_for(classes[0]), data.rows_for(classes[1]), classes[0],
            classes[1]};
}

seda::ThetaParams parse_theta(double lambda,
                              const std::vector<std::string>& level_args) {
    seda::ThetaParams theta;
    theta.lambda = lambda;
    for (const auto& arg : level_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad --level '" + arg +
                                        "', expected INDEX=VALUE");
        theta.levels[std::stoi(arg.substr(0, eq))] =
            std::stod(arg.substr(eq + 1));
    }
    return theta;
}

seda::SpikeConfig build_config(const seda::ThetaParams& theta,
                               const std::vector<int>& large,
                               const std::vector<int>& small, bool auto_spikes,
                               const std::vector<double>& eigenvalues,
                               double y) {
    seda::SpikeConfig config;
    config.large_indices = large;
    config.small_indices = small;
    if (auto_spikes && large.empty() && small.empty()) {
        const auto counts = seda::estimate_spike_counts(eigenvalues, y);
        for (int j = 0; j < counts.r1; ++j) config.large_indices.push_back(j);
        for (int j = 0; j < counts.r2; ++j)
            config.small_indices.push_back(
                static_cast<int>(eigenvalues.size()) - counts.r2 + j);
        config.bulk_variance = counts.sigma2;
    }
    config.levels = theta.levels;
    return config;
}

int run(int argc, char** argv) {
    CLI::App app{"Regularized and spectrally enhanced discriminant analysis"};
    app.require_subcommand(1);

    std::string config_path, out_path, train_path, test_path, model_path;
    std::string label_column = "label";
    std::uint64_t seed = 20240101;
    int threads = 1;
    app.add_option("--seed", seed, "Base RNG seed");
    app.add_option("--threads", threads, "Worker thread count");

    auto* sim = app.add_subcommand("simulate",
                                   "Run a Monte Carlo experiment from a JSON "
                                   "config and emit a CSV result table");
    sim->add_option("--config", config_path, "Experiment JSON")->required();
    sim->add_option("--out", out_path, "Output CSV path")->required();

    double lambda = 0.1;
    std::string kind = "rlda";
    std::vector<std::string> level_args;
    std::vector<int> large_idx, small_idx;
    bool auto_spikes = false;
    bool do_tune = false;

    auto* fit = app.add_subcommand("fit", "Fit a binary classifier from CSV");
    fit->add_option("--train", train_path, "Training CSV")->required();
    fit->add_option("--label", label_column, "Label column name");
    fit->add_option("--kind", kind, "rlda | seda | seda_corrected");
    fit->add_option("--lambda", lambda, "Ridge penalty");
    fit->add_option("--level", level_args, "Spike level INDEX=VALUE");
    fit->add_option("--large", large_idx, "Large-spike indices");
    fit->add_option("--small", small_idx, "Small-spike indices");
    fit->add_flag("--auto-spikes", auto_spikes,
                  "Detect spike counts from the sample spectrum");
    fit->add_flag("--tune", do_tune, "Tune theta before fitting");
    fit->add_option("--out", out_path, "Model JSON path")->required();

    auto* pred = app.add_subcommand("predict",
                                    "Predict labels for a CSV with a fitted "
                                    "model");
    pred->add_option("--model", model_path, "Model JSON")->required();
    pred->add_option("--test", test_path, "Test CSV")->required();
    pred->add_option("--label", label_column,
                     "Label column (for the accuracy line)");
    pred->add_option("--out", out_path, "Predictions CSV path")->required();

    auto* tune = app.add_subcommand("tune",
                                    "Estimate the optimal (lambda, levels)");
    tune->add_option("--train", train_path, "Training CSV")->required();
    tune->add_option("--label", label_column, "Label column name");
    tune->add_option("--large", large_idx, "Large-spike indices");
    tune->add_option("--small", small_idx, "Small-spike indices");
    tune->add_option("--out", out_path, "Theta JSON path");

    auto* theory = app.add_subcommand("theory",
                                      "Theoretical rates for a scenario "
                                      "config's roster");
    theory->add_option("--config", config_path, "Experiment JSON")->required();
    theory->add_option("--out", out_path, "Optional CSV path");

    auto* reduce = app.add_subcommand("reduce",
                                      "Multi-class projection to K-1 "
                                      "dimensions");
    reduce->add_option("--train", train_path, "Training CSV")->required();
    reduce->add_option("--label", label_column, "Label column name");
    reduce->add_option("--lambda", lambda, "Ridge penalty");
    reduce->add_option("--level", level_args, "Spike level INDEX=VALUE");
    reduce->add_option("--large", large_idx, "Large-spike indices");
    reduce->add_option("--small", small_idx, "Small-spike indices");
    reduce->add_option("--out", out_path, "Projected CSV path")->required();
    reduce->add_option("--model", model_path, "Projector JSON path");

    CLI11_PARSE(app, argc, argv);
    std::cout.precision(6);

    if (sim->parsed()) {
        auto cfg = seda::experiment_config_from_json(read_file(config_path));
        if (app.count("--seed")) cfg.base_seed = seed;
        const auto table = seda::run_experiment(cfg, threads);
        write_file(out_path, table.to_csv());
        for (const auto& spec : cfg.classifiers)
            std::cout << spec.name << ": mean empirical error "
                      << table.mean_emp(spec.name) << ", theory "
                      << table.mean_theory(spec.name) << "\n";
        return 0;
    }

    if (fit->parsed()) {
        const auto data = seda::load_csv(train_path, label_column);
        const auto split = binary_split(data);
        const auto theta0 = parse_theta(lambda, level_args);
        seda::SedaModel model;
        if (kind == "rlda" && !do_tune) {
            model = seda::fit_rlda(split.X1, split.X2, lambda);
        } else {
            const auto probe = seda::fit_rlda(split.X1, split.X2, lambda);
            const double y = static_cast<double>(probe.p) /
                             (probe.n1 + probe.n2);
            const auto config =
                build_config(theta0, large_idx, small_idx,
                             auto_spikes || do_tune,
                             probe.sample_eigenvalues, y);
            seda::ThetaParams theta = theta0;
            if (do_tune) {
                seda::PluginInputs in;
                in.sample_eigenvalues = probe.sample_eigenvalues;
                in.eigenvectors = probe.eigenvectors;
                in.mean_diff = probe.mean1 - probe.mean2;
                in.n1 = probe.n1;
                in.n2 = probe.n2;
                in.config = config;
                in.spikes = seda::estimate_spikes(probe.sample_eigenvalues,
                                                  config, y);
                theta = seda::tune_theta(in, seda::SearchConfig{});
                std::cout << "tuned lambda " << theta.lambda << "\n";
            }
            if (kind == "seda_corrected")
                model = seda::fit_corrected_seda(split.X1, split.X2, theta,
                                                 config);
            else
                model = seda::fit_seda(split.X1, split.X2, theta, config);
        }
        json doc = json::parse(seda::to_json(model));
        doc["class_names"] = {split.class1, split.class2};
        write_file(out_path, doc.dump(2));
        std::cout << "fitted " << model.kind << " on p=" << model.p
                  << ", n=" << model.n1 + model.n2 << "\n";
        return 0;
    }

    if (pred->parsed()) {
        const std::string text = read_file(model_path);
        const auto data = seda::load_csv(test_path, label_column);
        std::vector<int> labels;
        std::vector<std::string> names;
        if (seda::model_kind(text) == "multiclass") {
            const auto model = seda::multiclass_model_from_json(text);
            labels = seda::predict(model, data.features);
        } else {
            const auto model = seda::seda_model_from_json(text);
            labels = seda::predict(model, data.features);
        }
        const json doc = json::parse(text);
        if (doc.contains("class_names"))
            names = doc["class_names"].get<std::vector<std::string>>();
        std::ostringstream os;
        os << "index,predicted\n";
        int correct = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const std::string name =
                !names.empty() &&
                        static_cast<std::size_t>(labels[i]) <= names.size()
                    ? names[static_cast<std::size_t>(labels[i] - 1)]
                    : std::to_string(labels[i]);
            os << i << ',' << name << '\n';
            if (name == data.labels[i]) ++correct;
        }
        write_file(out_path, os.str());
        std::cout << "accuracy "
                  << static_cast<double>(correct) /
                         static_cast<double>(labels.size())
                  << " on " << labels.size() << " rows\n";
        return 0;
    }

    if (tune->parsed()) {
        const auto data = seda::load_csv(train_path, label_column);
        const auto split = binary_split(data);
        const auto probe = seda::fit_rlda(split.X1, split.X2, 0.1);
        const double y =
            static_cast<double>(probe.p) / (probe.n1 + probe.n2);
        const auto config = build_config(seda::ThetaParams{}, large_idx,
                                         small_idx, true,
                                         probe.sample_eigenvalues, y);
        seda::PluginInputs in;
        in.sample_eigenvalues = probe.sample_eigenvalues;
        in.eigenvectors = probe.eigenvectors;
        in.mean_diff = probe.mean1 - probe.mean2;
        in.n1 = probe.n1;
        in.n2 = probe.n2;
        in.config = config;
        in.spikes =
            seda::estimate_spikes(probe.sample_eigenvalues, config, y);
        const auto theta = seda::tune_theta(in, seda::SearchConfig{});
        const double objective = seda::plugin_objective(in, theta);
        json doc;
        doc["lambda"] = theta.lambda;
        doc["levels"] = json::object();
        for (const auto& [j, l] : theta.levels)
            doc["levels"][std::to_string(j)] = l;
        doc["objective"] = objective;
        if (!out_path.empty()) write_file(out_path, doc.dump(2));
        std::cout << "lambda " << theta.lambda << ", objective " << objective
                  << ", " << theta.levels.size() << " levels\n";
        return 0;
    }

    if (theory->parsed()) {
        const auto cfg =
            seda::experiment_config_from_json(read_file(config_path));
        const auto rates = seda::theoretical_rates(cfg);
        std::ostringstream os;
        os << "classifier,theory_error\n";
        os.precision(17);
        for (const auto& [name, rate] : rates) {
            os << name << ',' << rate << '\n';
            std::cout << name << ": " << rate << "\n";
        }
        if (!out_path.empty()) write_file(out_path, os.str());
        return 0;
    }

    if (reduce->parsed()) {
        const auto data = seda::load_csv(train_path, label_column);
        const auto classes = data.classes();
        std::vector<Eigen::MatrixXd> Xs;
        for (const auto& c : classes) Xs.push_back(data.rows_for(c));
        const auto theta = parse_theta(lambda, level_args);
        seda::SpikeConfig config;
        config.large_indices = large_idx;
        config.small_indices = small_idx;
        config.levels = theta.levels;
        auto model = seda::fit_multiclass(Xs, theta, config);
        const Eigen::MatrixXd Z = seda::transform(model, data.features);
        seda::Dataset reduced;
        reduced.features = Z;
        reduced.labels = data.labels;
        for (long c = 0; c < Z.cols(); ++c)
            reduced.feature_names.push_back("d" + std::to_string(c + 1));
        seda::save_csv(reduced, out_path, label_column);
        if (!model_path.empty()) {
            json doc = json::parse(seda::to_json(model));
            doc["class_names"] = classes;
            write_file(model_path, doc.dump(2));
        }
        std::cout << "projected " << Z.rows() << " rows to " << Z.cols()
                  << " dimensions\n";
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
