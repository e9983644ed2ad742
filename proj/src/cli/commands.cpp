#include "bandsel/cli.hpp"

#include "bandsel/bandmetrics.hpp"
#include "bandsel/bsnet.hpp"
#include "bandsel/datahub.hpp"
#include "bandsel/errors.hpp"
#include "bandsel/evalharness.hpp"
#include "bandsel/kernels.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace bandsel::cli {

namespace {

namespace fs = std::filesystem;

/// Every flag any subcommand accepts; unset ones keep their defaults.
struct RunConfig {
    // synth
    std::size_t rows = 32, cols = 32, bands = 60, informative = 5, fanin = 0;
    double noise = 0.01, mixed_std = 0.11;
    // train
    std::string variant = "fc";
    double lambda = 1e-2, lr = 2e-3;
    std::size_t maxiter = 100, batch_size = 0, window = 7, stride = 2, top_k = 15;
    std::vector<std::size_t> drop;
    bool drop_indian_pines = false;
    // metrics / eval
    std::string k_range = "3:30:2";
    std::size_t bins = metrics::kDefaultBins, runs = 20, neighbors = 5;
    double train_fraction = 0.05;
    std::vector<std::string> selections;
    bool with_variance = false, with_random = false;
    std::string gt_csv;
    // shared
    std::uint64_t seed = 0;
    std::string input, output;
};

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot write '" + path.string() + "'");
    f << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn)
{
    std::ostringstream os;
    fn(os);
    write_text(path, os.str());
}

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

data::HsiCube load_input(const RunConfig& c)
{
    data::HsiCube cube = data::load_cube(c.input);
    if (!c.gt_csv.empty())
        cube.ground_truth = data::load_ground_truth_csv(c.gt_csv, cube.rows, cube.cols);
    std::vector<std::size_t> drop = c.drop;
    if (c.drop_indian_pines) {
        const auto ip = data::indian_pines_water_bands();
        drop.insert(drop.end(), ip.begin(), ip.end());
    }
    if (!drop.empty())
        cube = data::exclude_bands(cube, drop);
    return data::scale_unit(cube);
}

std::string with_suffix(const std::string& prefix, const std::string& suffix) { return prefix + suffix; }

void cmd_synth(const RunConfig& c, std::ostream& out)
{
    data::SynthSpec spec;
    spec.rows = c.rows;
    spec.cols = c.cols;
    spec.bands = c.bands;
    spec.noise_sigma = c.noise;
    spec.seed = c.seed;
    spec.mix_fanin = c.fanin;
    spec.mixed_std = c.mixed_std;
    if (c.rows == 0 || c.cols == 0 || c.bands == 0)
        throw ConfigError("rows, cols and bands must be positive");
    spec.informative = data::choose_informative(c.bands, c.informative, c.seed);
    const data::HsiCube cube = data::synth_generate(spec);
    if (fs::path(c.output).has_parent_path())
        fs::create_directories(fs::path(c.output).parent_path());
    data::save_cube(cube, c.output);

    nlohmann::json side = {{"informative", spec.informative},
                           {"rows", spec.rows},
                           {"cols", spec.cols},
                           {"bands", spec.bands},
                           {"noise_sigma", spec.noise_sigma},
                           {"mix_fanin", spec.mix_fanin},
                           {"mixed_std", spec.mixed_std},
                           {"seed", spec.seed},
                           {"classes", spec.informative.size()}};
    write_text(c.output + ".json", side.dump(2) + "\n");
    out << "wrote " << c.output << " (" << c.rows << "x" << c.cols << "x" << c.bands << "), planted bands "
        << nlohmann::json(spec.informative).dump() << "\n";
}

void cmd_train(const RunConfig& c, std::ostream& out)
{
    const bsnet::Variant variant = bsnet::parse_variant(c.variant);
    const data::HsiCube cube = load_input(c);
    const data::SampleSet samples =
        variant == bsnet::Variant::fc ? data::extract_pixels(cube) : data::extract_patches(cube, c.window, c.stride);

    bsnet::TrainConfig cfg;
    cfg.lambda = c.lambda;
    cfg.learning_rate = c.lr;
    cfg.max_epochs = c.maxiter;
    cfg.batch_size = c.batch_size;
    cfg.seed = c.seed;
    cfg.top_k = std::min(c.top_k, cube.bands);
    cfg.validate();

    out << "training BS-Net-" << c.variant << " on " << samples.count() << " samples x " << cube.bands
        << " bands\n";
    auto outcome = bsnet::train(samples, variant, cfg);
    auto& result = outcome.result;
    result.config["input"] = fs::path(c.input).filename().string();
    if (variant == bsnet::Variant::conv) {
        result.config["window"] = c.window;
        result.config["stride"] = c.stride;
    }
    if (!cube.band_labels.empty())
        result.config["band_labels"] = cube.band_labels;

    write_text(with_suffix(c.output, ".json"), to_json(result).dump(2) + "\n");
    write_with(with_suffix(c.output, "_loss.csv"), [&](std::ostream& os) { write_loss_csv(os, result); });
    write_with(with_suffix(c.output, "_weights.csv"),
               [&](std::ostream& os) { write_weights_history_csv(os, result); });
    out << "final loss " << result.loss_trace.back() << "; top-" << result.top_k.size() << " "
        << nlohmann::json(result.top_k).dump() << "\n";
}

SelectionResult load_selection(const std::string& path, std::size_t bands)
{
    SelectionResult r = selection_from_json(read_json(path));
    if (r.ranking.size() != bands)
        throw DataError("selection '" + path + "' ranks " + std::to_string(r.ranking.size()) +
                        " bands but the cube has " + std::to_string(bands));
    return r;
}

void cmd_metrics(const RunConfig& c, std::ostream& out)
{
    const data::HsiCube cube = load_input(c);
    const auto ks = eval::parse_k_range(c.k_range);
    SelectionResult sel = c.selections.empty() ? metrics::variance_rank(cube, 1)
                                               : load_selection(c.selections.front(), cube.bands);
    for (std::size_t k : ks)
        if (k < 2 || k > cube.bands)
            throw ConfigError("MSD sweep k=" + std::to_string(k) + " must lie in [2, " +
                              std::to_string(cube.bands) + "]");

    write_with(with_suffix(c.output, "_entropy.csv"),
               [&](std::ostream& os) { metrics::write_entropy_csv(os, cube, c.bins); });
    const auto sweep = metrics::msd_sweep(cube, sel.ranking, ks, c.bins);
    write_with(with_suffix(c.output, "_msd.csv"), [&](std::ostream& os) { metrics::write_msd_csv(os, sweep); });
    nlohmann::json side = {{"input", fs::path(c.input).filename().string()},
                           {"selection", c.selections.empty() ? std::string("variance") : c.selections.front()},
                           {"ranking_method", sel.method},
                           {"bins", c.bins},
                           {"k", ks},
                           {"log_base", "e"},
                           {"kl_smoothing", metrics::kKlSmoothing}};
    write_text(with_suffix(c.output, "_metrics.json"), side.dump(2) + "\n");
    out << "wrote entropy for " << cube.bands << " bands and MSD for " << ks.size() << " subset sizes\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out)
{
    const data::HsiCube cube = load_input(c);
    if (!cube.has_ground_truth())
        throw DataError("'" + c.input + "' has no ground truth; pass --gt labels.csv or use a labeled cube");

    std::vector<eval::Selector> selectors;
    for (const auto& path : c.selections) {
        const auto r = load_selection(path, cube.bands);
        selectors.push_back(eval::ranking_selector(fs::path(path).stem().string(), r.ranking));
    }
    if (c.with_variance)
        selectors.push_back(eval::ranking_selector("variance", metrics::variance_rank(cube, 1).ranking));
    if (c.with_random)
        selectors.push_back(eval::random_selector(cube.bands));
    if (selectors.empty())
        throw ConfigError("no selectors: pass --selection FILE, --variance or --random");

    eval::SweepConfig cfg;
    cfg.ks = eval::parse_k_range(c.k_range);
    cfg.runs = c.runs;
    cfg.base_seed = c.seed;
    cfg.train_fraction = c.train_fraction;
    cfg.k_neighbors = c.neighbors;
    const auto rows = eval::sweep(cube, selectors, cfg);
    const auto summary = eval::summarize(rows);

    write_with(with_suffix(c.output, "_runs.csv"), [&](std::ostream& os) { eval::write_sweep_csv(os, rows); });
    write_with(with_suffix(c.output, "_summary.csv"),
               [&](std::ostream& os) { eval::write_summary_csv(os, summary); });
    nlohmann::json side = {{"input", fs::path(c.input).filename().string()},
                           {"selections", c.selections},
                           {"variance", c.with_variance},
                           {"random", c.with_random},
                           {"k", cfg.ks},
                           {"runs", cfg.runs},
                           {"seed", cfg.base_seed},
                           {"train_fraction", cfg.train_fraction},
                           {"neighbors", cfg.k_neighbors},
                           {"classifier", "knn"}};
    write_text(with_suffix(c.output, "_eval.json"), side.dump(2) + "\n");
    for (const auto& s : summary)
        out << s.selector << " k=" << s.k << " OA " << s.oa_mean << " +- " << s.oa_std << "\n";
}

void apply_thread_cap()
{
    if (const char* env = std::getenv("BANDSEL_THREADS")) {
        try {
            kernels::set_max_threads(std::stoi(env));
        } catch (const std::exception&) {
            throw ConfigError(std::string("BANDSEL_THREADS must be an integer, got '") + env + "'");
        }
    }
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err)
{
    RunConfig c;
    CLI::App app{"Attention-based hyperspectral band selection"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic cube with planted informative bands");
    synth->add_option("--rows", c.rows, "image rows")->capture_default_str();
    synth->add_option("--cols", c.cols, "image columns")->capture_default_str();
    synth->add_option("--bands", c.bands, "band count")->capture_default_str();
    synth->add_option("--informative", c.informative, "number of planted bands")->capture_default_str();
    synth->add_option("--noise", c.noise, "noise std on mixed bands")->capture_default_str();
    synth->add_option("--fanin", c.fanin, "planted bands per mixed band (0 = all)")->capture_default_str();
    synth->add_option("--mixed-std", c.mixed_std, "noise-free std of each mixed band")->capture_default_str();
    synth->add_option("--seed", c.seed)->capture_default_str();
    synth->add_option("-o,--output", c.output, "cube file to write")->required();

    auto* train = app.add_subcommand("train", "train a BS-Net and rank bands");
    train->add_option("-i,--input", c.input, "cube file")->required();
    train->add_option("-o,--output", c.output, "output prefix")->required();
    train->add_option("--variant", c.variant, "fc or conv")->capture_default_str();
    train->add_option("--lambda", c.lambda, "L1 coefficient on band weights")->capture_default_str();
    train->add_option("--lr,--eta", c.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--maxiter", c.maxiter, "training epochs")->capture_default_str();
    train->add_option("--batch-size", c.batch_size, "mini-batch size (0 = 64 fc / 32 conv)")->capture_default_str();
    train->add_option("--a", c.window, "patch window (conv)")->capture_default_str();
    train->add_option("--t", c.stride, "patch stride (conv)")->capture_default_str();
    train->add_option("--k", c.top_k, "bands to report in top_k")->capture_default_str();
    train->add_option("--seed", c.seed)->capture_default_str();

    auto* met = app.add_subcommand("metrics", "per-band entropy and MSD sweep");
    met->add_option("-i,--input", c.input, "cube file")->required();
    met->add_option("-o,--output", c.output, "output prefix")->required();
    met->add_option("--selection", c.selections, "selection JSON whose ranking is swept (default: variance)")
        ->expected(0, 1);
    met->add_option("--k", c.k_range, "subset sizes start:end:step")->capture_default_str();
    met->add_option("--bins", c.bins, "histogram bins")->capture_default_str();

    auto* ev = app.add_subcommand("eval", "k-NN classification sweep over selectors");
    ev->add_option("-i,--input", c.input, "cube file")->required();
    ev->add_option("-o,--output", c.output, "output prefix")->required();
    ev->add_option("--selection", c.selections, "selection JSON files");
    ev->add_flag("--variance", c.with_variance, "include the variance-ranking baseline");
    ev->add_flag("--random", c.with_random, "include a uniform random selector");
    ev->add_option("--k", c.k_range, "subset sizes start:end:step")->capture_default_str();
    ev->add_option("--runs", c.runs, "independent runs per k")->capture_default_str();
    ev->add_option("--train-fraction", c.train_fraction)->capture_default_str();
    ev->add_option("--neighbors", c.neighbors, "k of the k-NN classifier")->capture_default_str();
    ev->add_option("--seed", c.seed)->capture_default_str();

    for (auto* sub : {train, met, ev}) {
        sub->add_option("--gt", c.gt_csv, "ground truth CSV (row,col,label)");
        sub->add_option("--drop", c.drop, "band positions to exclude")->delimiter(',');
        sub->add_flag("--drop-indian-pines", c.drop_indian_pines, "exclude the Indian Pines water-absorption bands");
    }

    std::vector<std::string> argv(args.begin(), args.end());
    std::vector<const char*> raw;
    for (const auto& a : argv)
        raw.push_back(a.c_str());
    try {
        app.parse(int(raw.size()), raw.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        apply_thread_cap();
        if (*synth)
            cmd_synth(c, out);
        else if (*train)
            cmd_train(c, out);
        else if (*met)
            cmd_metrics(c, out);
        else if (*ev)
            cmd_eval(c, out);
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const DimensionError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    }
}

int run(int argc, const char* const* argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace bandsel::cli
