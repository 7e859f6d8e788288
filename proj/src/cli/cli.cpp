#include "mug/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mug/checks.hpp"
#include "mug/error.hpp"
#include "mug/trainer.hpp"

namespace mug::cli {

namespace fs = std::filesystem;
using trainer::ExperimentConfig;

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string component;
    std::string pred;
    std::string gt;
    double multiplier = 0.0;
    std::size_t videos = 0;
    std::size_t epochs = 0;
    std::size_t classes = 0;
    std::size_t segments = 0;
    std::size_t cases = 100;
};

class Command {
public:
    Command(CLI::App& app, const std::string& name, const std::string& help, Options& o)
        : sub_(app.add_subcommand(name, help)) {
        sub_->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
        sub_->add_option("--seed", o.seed, "seed for every random stream");
    }
    CLI::App* operator->() const { return sub_; }
    CLI::App* get() const { return sub_; }
    bool given(const std::string& flag) const {
        const CLI::Option* opt = sub_->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    }

private:
    CLI::App* sub_;
};

ExperimentConfig resolve_config(const Command& cmd, const Options& o, const fs::path& fallback = {}) {
    ExperimentConfig c;
    if (!o.config.empty()) {
        c = trainer::load_config(o.config);
    } else if (!fallback.empty() && fs::exists(fallback)) {
        c = trainer::load_config(fallback);
    }
    if (cmd.given("--seed")) c.set_seed(o.seed);
    if (cmd.given("--data")) c.data_dir = o.data;
    if (cmd.given("--multiplier")) {
        c.augment.multiplier = o.multiplier;
        c.augment.target_count.reset();
    }
    if (cmd.given("--videos")) c.synth.videos = o.videos;
    if (cmd.given("--epochs")) c.train.epochs = o.epochs;
    c.validate();
    return c;
}

// A dataset root (with train/ and val/) or a single split directory/manifest.
fs::path resolve_split(const fs::path& location, const std::string& preferred) {
    if (fs::is_directory(location) && fs::exists(location / preferred / "manifest.json")) return location / preferred;
    if (fs::is_directory(location) && !fs::exists(location / "manifest.json")) {
        throw LoadError(location.string() + ": no manifest.json and no " + preferred + "/ split");
    }
    return location;
}

void print_report(std::ostream& out, const metrics::MetricReport& r) {
    out << r.table() << '\n' << metrics::MetricReport::csv_header() << '\n' << r.csv_row() << '\n';
}

int cmd_synth(const Command& cmd, const Options& o, std::ostream& out) {
    const ExperimentConfig c = resolve_config(cmd, o);
    const auto data = data::generate_synthetic_dataset(c.synth);
    data::write_synthetic_dataset(data, o.out);
    out << "wrote " << data.train.manifest.videos.size() << " train and " << data.val.manifest.videos.size()
        << " val videos to " << o.out << '\n';
    return kExitOk;
}

int cmd_augment(const Command& cmd, const Options& o, std::ostream& out) {
    const ExperimentConfig c = resolve_config(cmd, o);
    if (c.data_dir.empty()) throw ConfigError("augment: pass --data or set data_dir in the config");
    const data::Dataset pool = data::load_dataset(resolve_split(c.data_dir, "train"));
    const std::size_t base = pool.videos.size();
    const auto batch = trainer::augment_training_split(pool, c.augment);
    augment::write_cmrc_batch(o.out, batch, pool.vocabulary, pool.segments);

    const auto dist = augment::count_label_distribution(pool.videos, c.augment.resolve_min_count(base));
    out << "generated " << batch.records.size() << " combined records from a pool of " << base
        << " (class threshold " << dist.threshold << ")\n";
    if (!batch.records.empty() && !dist.empty()) {
        out << "L1 distance to retained class distribution: "
            << augment::l1_distance(augment::generated_profile(batch.records, dist), dist.normalized()) << '\n';
    }
    return kExitOk;
}

int cmd_train(const Command& cmd, const Options& o, std::ostream& out) {
    const ExperimentConfig c = resolve_config(cmd, o);
    const trainer::Splits splits = trainer::load_splits(c);
    const auto result = trainer::train(c, splits, [&](const trainer::EpochLog& e, const model::AvMamba&) {
        out << "epoch " << e.epoch << "  loss " << std::setprecision(6) << e.train_loss;
        if (e.val) out << "  val Type@AV " << e.val->segment[3];
        out << "  (" << std::setprecision(3) << e.seconds << " s)\n" << std::flush;
        return true;
    });
    trainer::save_run(o.out, c, result);
    out << result.log.parameter_count << " parameters; " << result.log.base_videos << " base + "
        << result.log.augmented_videos << " combined videos; best epoch " << result.log.best_epoch << "; run saved to "
        << o.out << '\n';
    return kExitOk;
}

int cmd_eval(const Command& cmd, const Options& o, std::ostream& out) {
    const fs::path ckpt = o.checkpoint;
    const ExperimentConfig c = resolve_config(cmd, o, ckpt.parent_path() / "config.json");
    const data::Dataset ds = cmd.given("--data") ? data::load_dataset(resolve_split(o.data, "val"))
                                                 : trainer::load_splits(c).val;
    const auto model = trainer::build_model(c, ds);
    trainer::restore(*model, load_checkpoint(ckpt));
    const auto preds = trainer::predict(trainer::model_predictor(*model, c.eval), ds);
    const auto report = trainer::evaluate(*model, ds, c.eval);
    print_report(out, report);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        metrics::write_report_csv(fs::path(o.out) / "report.csv", report);
        trainer::write_predictions(fs::path(o.out) / "predictions.csv", preds, ds.vocabulary);
    }
    return kExitOk;
}

int cmd_ablate(const Command& cmd, const Options& o, std::ostream& out) {
    const ExperimentConfig c = resolve_config(cmd, o);
    const trainer::Component component = trainer::parse_component(o.component);
    const auto result = trainer::ablate(c, component, trainer::load_splits(c));
    out << "wo/" << trainer::component_name(component) << " (best epoch " << result.log.best_epoch << ")\n";
    print_report(out, result.report);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        metrics::write_report_csv(fs::path(o.out) / "report.csv", result.report);
        result.log.write_csv(fs::path(o.out) / "train_log.csv");
    }
    return kExitOk;
}

int cmd_metrics(const Command& cmd, const Options& o, std::ostream& out) {
    const ExperimentConfig c = resolve_config(cmd, o);
    const std::size_t classes = cmd.given("--classes") ? o.classes : c.synth.classes;
    const std::size_t segments = cmd.given("--segments") ? o.segments : c.synth.segments;
    const auto report = metrics::evaluate_files(o.pred, o.gt, data::Vocabulary::standard(classes), segments,
                                                c.eval.iou_threshold);
    print_report(out, report);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        metrics::write_report_csv(fs::path(o.out) / "report.csv", report);
    }
    return kExitOk;
}

std::uint64_t check_seed(const Command& cmd, const Options& o) {
    return cmd.given("--seed") ? o.seed : resolve_config(cmd, o).train.seed;
}

void print_outcomes(std::ostream& out, const std::vector<checks::CheckOutcome>& outcomes) {
    for (const auto& c : outcomes) {
        out << (c.pass() ? "ok    " : "FAIL  ") << std::left << std::setw(44) << c.name << std::right << "  "
            << std::scientific << std::setprecision(3) << c.value << (c.exact ? "  (exact)" : "  < ")
            << (c.exact ? "" : [&] {
                   std::ostringstream t;
                   t << std::scientific << std::setprecision(0) << c.tolerance;
                   return t.str();
               }())
            << std::defaultfloat;
        if (!c.detail.empty()) out << "  [" << c.detail << ']';
        out << '\n';
    }
}

int cmd_scan_check(const Command& cmd, const Options& o, std::ostream& out) {
    const std::uint64_t seed = check_seed(cmd, o);
    const auto oracle = checks::scan_oracle_suite(o.cases, seed);
    std::vector<checks::CheckOutcome> all{{"parallel vs sequential scan (" + std::to_string(oracle.cases) + " cases)",
                                           oracle.max_abs_deviation, 1e-9, false,
                                           "worst " + oracle.worst_case}};
    const auto defs = checks::scan_definition_checks(seed);
    all.insert(all.end(), defs.begin(), defs.end());
    print_outcomes(out, all);
    out << "oracle suite time " << std::setprecision(3) << oracle.seconds << " s\n";
    return checks::all_pass(all) ? kExitOk : kExitValidation;
}

int cmd_grad_check(const Command& cmd, const Options& o, std::ostream& out) {
    const auto outcomes = checks::gradient_suite(check_seed(cmd, o));
    print_outcomes(out, outcomes);
    const auto failed = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& c) { return !c.pass(); });
    out << outcomes.size() - static_cast<std::size_t>(failed) << '/' << outcomes.size() << " gradient checks passed\n";
    return failed == 0 ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Audio-visual video parsing on synthetic data: data generation, augmentation, training, scoring"};
    app.name("mug");
    app.require_subcommand(1, 1);
    Options o;

    Command synth(app, "synth", "generate a synthetic dataset (train/ and val/)", o);
    synth->add_option("--out", o.out, "output directory")->required();
    synth->add_option("--videos", o.videos, "training videos");

    Command augment(app, "augment", "write a cross-modal combination batch for a training split", o);
    augment->add_option("--data", o.data, "dataset root or split directory");
    augment->add_option("--out", o.out, "output directory")->required();
    augment->add_option("--multiplier", o.multiplier, "combined videos per base video");

    Command train(app, "train", "train and save checkpoint, log and config", o);
    train->add_option("--data", o.data, "dataset root (train/, val/); synthetic in memory if unset");
    train->add_option("--out", o.out, "run directory")->required();
    train->add_option("--multiplier", o.multiplier, "combination multiplier (0 disables)");
    train->add_option("--epochs", o.epochs, "epochs");

    Command eval(app, "eval", "score a checkpoint", o);
    eval->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", o.data, "dataset root or split directory (default: the config's val split)");
    eval->add_option("--out", o.out, "write report.csv and predictions.csv here");

    Command ablate(app, "ablate", "train and score a variant without one component", o);
    ablate->add_option("--component", o.component, "CMRC, TSA, AMF, MFE or PLSIM")->required();
    ablate->add_option("--data", o.data, "dataset root (train/, val/)");
    ablate->add_option("--multiplier", o.multiplier, "combination multiplier");
    ablate->add_option("--epochs", o.epochs, "epochs");
    ablate->add_option("--out", o.out, "write report.csv and train_log.csv here");

    Command score(app, "metrics", "score a prediction dump against ground truth", o);
    score->add_option("--pred", o.pred, "prediction CSV")->required();
    score->add_option("--gt", o.gt, "ground-truth CSV")->required();
    score->add_option("--classes", o.classes, "vocabulary size (first N standard categories)");
    score->add_option("--segments", o.segments, "segments per video");
    score->add_option("--out", o.out, "write report.csv here");

    Command scan_check(app, "scan-check", "parallel-vs-sequential and scan definition checks", o);
    scan_check->add_option("--cases", o.cases, "random oracle cases");

    Command grad_check(app, "grad-check", "finite-difference gradient suite", o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                out << app.help();
                for (const CLI::App* sub : app.get_subcommands()) out << sub->help();
                return kExitOk;
            }
            err << "error: " << e.what() << '\n';
            return kExitValidation;
        }
        if (*synth.get()) return cmd_synth(synth, o, out);
        if (*augment.get()) return cmd_augment(augment, o, out);
        if (*train.get()) return cmd_train(train, o, out);
        if (*eval.get()) return cmd_eval(eval, o, out);
        if (*ablate.get()) return cmd_ablate(ablate, o, out);
        if (*score.get()) return cmd_metrics(score, o, out);
        if (*scan_check.get()) return cmd_scan_check(scan_check, o, out);
        if (*grad_check.get()) return cmd_grad_check(grad_check, o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    err << "internal error: no command ran\n";
    return kExitInternal;
}

}  // namespace mug::cli
