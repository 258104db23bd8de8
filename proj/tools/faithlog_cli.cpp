#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "faithlog/embedding.hpp"
#include "faithlog/faithfulness.hpp"
#include "faithlog/io.hpp"
#include "faithlog/model.hpp"
#include "faithlog/pipeline.hpp"
#include "faithlog/synth.hpp"
#include "faithlog/trainer.hpp"

using namespace faithlog;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDataConfig = 3;
constexpr int kExitCheckpoint = 4;

std::string read_file_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_parse(const std::string& raw_path, const std::string& labels_path,
              const std::string& out_prefix, const DrainConfig& dcfg,
              const WindowConfig& wcfg) {
    std::vector<LogRecord> records = read_raw_log(raw_path);
    std::vector<int> labels;
    if (!labels_path.empty()) labels = read_labels(labels_path);

    DrainParser parser(dcfg);
    std::vector<ParsedRecord> parsed;
    std::size_t label_idx = 0;
    for (const LogRecord& r : records) {
        ParsedRecord pr;
        pr.template_id = parser.parse_line(r.content).template_id;
        if (!labels.empty()) {
            if (label_idx >= labels.size())
                throw InputError("label file shorter than log file");
            pr.anomalous = labels[label_idx++] != 0;
        }
        parsed.push_back(pr);
    }
    if (!labels.empty() && label_idx != labels.size())
        throw InputError("label file longer than log file");

    Dataset data = sessionize(parsed, wcfg);
    write_templates(out_prefix + ".templates", parser.templates());
    write_dataset(out_prefix + ".seq", data);
    std::cout << "templates " << parser.templates().size() << "\n";
    std::cout << "sequences " << data.size() << "\n";
    return kExitOk;
}

int run_generate(const SynthConfig& cfg, const std::string& out_prefix) {
    SynthCorpus corpus = generate(cfg);
    write_dataset(out_prefix + ".seq", corpus.sequences);
    std::ofstream raw(out_prefix + ".log");
    if (!raw) throw InputError("cannot open " + out_prefix + ".log");
    for (const std::string& l : corpus.raw_lines) raw << l << "\n";
    std::ofstream lab(out_prefix + ".labels");
    if (!lab) throw InputError("cannot open " + out_prefix + ".labels");
    for (int v : corpus.line_labels) lab << v << "\n";
    std::cout << "sequences " << corpus.sequences.size() << "\n";
    std::cout << "templates " << corpus.total_templates << "\n";
    return kExitOk;
}

int run_train(const std::string& data_path, const std::string& config_path,
              const std::string& ckpt_out, const std::string& log_out,
              const std::string& eval_path, std::optional<std::uint64_t> seed_override) {
    std::string config_text = config_path.empty() ? "" : read_file_text(config_path);
    ExperimentConfig cfg =
        config_path.empty() ? ExperimentConfig{} : parse_config_text(config_text);
    if (seed_override) cfg.train.seed = *seed_override;
    std::string run_id = run_id_of(config_text, cfg.train.seed);

    Dataset train = load_dataset(data_path);
    Dataset heldout;
    if (!eval_path.empty()) heldout = load_dataset(eval_path);

    ModelConfig mc;
    mc.d_model = cfg.d_model;
    mc.n_heads = cfg.n_heads;
    mc.n_layers = cfg.n_layers;
    mc.negative_pathway = cfg.negative_pathway;
    mc.seed = cfg.train.seed;
    FaithLogModel model(mc);
    EmbeddingProvider emb(mc.d_model);

    try {
        FitResult res =
            fit(model, emb, train, eval_path.empty() ? nullptr : &heldout, cfg.train);
        if (!log_out.empty()) write_training_log(log_out, res.log, run_id);
        if (!res.log.empty()) {
            const EpochLog& last = res.log.back();
            std::cout << "final total " << last.total << " heldout_f1 " << last.heldout_f1
                      << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataConfig;
    }
    save_checkpoint(ckpt_out, model, run_id);
    std::cout << "checkpoint " << ckpt_out << "\n";
    return kExitOk;
}

int run_detect(const std::string& data_path, const std::string& ckpt_path,
               const std::string& out_path) {
    std::string run_id;
    FaithLogModel model = load_checkpoint(ckpt_path, &run_id);
    EmbeddingProvider emb(model.config().d_model);
    Dataset data = load_dataset(data_path);
    std::ofstream out(out_path);
    if (!out) throw InputError("cannot open " + out_path);
    if (!run_id.empty()) out << "# run_id=" << run_id << "\n";
    out << "sequence_id,p,decision\n";
    char buf[128];
    for (const EventSequence& s : data) {
        DetectionResult r = model.detect(emb.embed_sequence(s));
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%d\n", s.sequence_id.c_str(), r.confidence,
                      r.anomalous ? 1 : 0);
        out << buf;
    }
    return kExitOk;
}

int run_evaluate(const std::string& data_path, const std::string& ckpt_path,
                 const std::string& out_path, std::vector<int> ks) {
    std::string run_id;
    FaithLogModel model = load_checkpoint(ckpt_path, &run_id);
    EmbeddingProvider emb(model.config().d_model);
    Dataset data = load_dataset(data_path);
    if (ks.empty()) ks = {1, 3, 5};
    FaithfulnessReport rep = evaluate_faithfulness(model, emb, data, ks);
    write_report(out_path, rep, run_id);
    std::cout << "report " << out_path << "\n";
    return kExitOk;
}

int run_perturb(const std::string& data_path, const std::string& ckpt_path,
                const std::string& out_path) {
    std::string run_id;
    FaithLogModel model = load_checkpoint(ckpt_path, &run_id);
    EmbeddingProvider emb(model.config().d_model);
    Dataset data = load_dataset(data_path);
    SupportRateResult sr = support_rate(model, emb, data);
    auto locs = localize(model, emb, data);
    write_verdicts(out_path, sr, locs, run_id);
    std::cout << "sr " << sr.sr << " evaluated " << sr.evaluated << "\n";
    return kExitOk;
}

int run_split(const std::string& data_path, double fraction, std::uint64_t seed,
              const std::string& train_out, const std::string& test_out) {
    Dataset data = load_dataset(data_path);
    auto [train, test] = split(data, fraction, seed);
    write_dataset(train_out, train);
    write_dataset(test_out, test);
    std::cout << "train " << train.size() << " test " << test.size() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FaithLog: faithful log-based anomaly detection toolkit"};
    app.require_subcommand(1);

    int threads = 1;  // 1 = bitwise-reproducible mode; execution is serial
    app.add_option("--threads", threads, "worker threads (1 = bitwise-reproducible)");

    // parse
    auto* parse = app.add_subcommand("parse", "parse raw logs into a sequence dataset");
    std::string raw_path, labels_path, out_prefix;
    DrainConfig dcfg;
    WindowConfig wcfg;
    parse->add_option("--log", raw_path, "raw log file")->required();
    parse->add_option("--labels", labels_path, "per-line 0/1 label sidecar");
    parse->add_option("--out", out_prefix, "output prefix (.templates/.seq)")->required();
    parse->add_option("--depth", dcfg.depth, "parser tree depth");
    parse->add_option("--sim-threshold", dcfg.similarity_threshold, "similarity threshold");
    parse->add_option("--max-children", dcfg.max_children, "branching cap");
    parse->add_option("--window", wcfg.size, "window size");
    parse->add_option("--stride", wcfg.stride, "window stride");

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic labeled corpus");
    SynthConfig scfg;
    std::string gen_out;
    gen->add_option("--out", gen_out, "output prefix (.seq/.log/.labels)")->required();
    gen->add_option("--n-templates", scfg.n_templates);
    gen->add_option("--n-anomaly-templates", scfg.n_anomaly_templates);
    gen->add_option("--n-sequences", scfg.n_sequences);
    gen->add_option("--seq-length", scfg.seq_length);
    gen->add_option("--anomaly-rate", scfg.anomaly_rate);
    gen->add_option("--noise-rate", scfg.noise_rate);
    gen->add_option("--seed", scfg.seed);

    // split
    auto* spl = app.add_subcommand("split", "stratified train/test split");
    std::string split_in, split_train, split_test;
    double split_fraction = 0.8;
    std::uint64_t split_seed = 0;
    spl->add_option("--data", split_in)->required();
    spl->add_option("--train-fraction", split_fraction);
    spl->add_option("--seed", split_seed);
    spl->add_option("--train-out", split_train)->required();
    spl->add_option("--test-out", split_test)->required();

    // train
    auto* train = app.add_subcommand("train", "train a model");
    std::string train_data, train_config, train_ckpt, train_log, train_eval;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train->add_option("--data", train_data)->required();
    train->add_option("--config", train_config, "flat key-value config file");
    train->add_option("--out", train_ckpt, "checkpoint output")->required();
    train->add_option("--log", train_log, "training log output");
    train->add_option("--eval", train_eval, "held-out dataset for the F1 column");
    train->add_option("--seed", train_seed)->each([&](const std::string&) { train_seed_set = true; });

    // detect
    auto* det = app.add_subcommand("detect", "run detection over a dataset");
    std::string det_data, det_ckpt, det_out;
    det->add_option("--data", det_data)->required();
    det->add_option("--checkpoint", det_ckpt)->required();
    det->add_option("--out", det_out)->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "diagnostic-faithfulness report");
    std::string eval_data, eval_ckpt, eval_out;
    std::vector<int> eval_ks;
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--checkpoint", eval_ckpt)->required();
    eval->add_option("--out", eval_out)->required();
    eval->add_option("--ks", eval_ks, "cutoffs (default 1 3 5)");

    // perturb
    auto* pert = app.add_subcommand("perturb", "event-perturbation verdicts");
    std::string pert_data, pert_ckpt, pert_out;
    pert->add_option("--data", pert_data)->required();
    pert->add_option("--checkpoint", pert_ckpt)->required();
    pert->add_option("--out", pert_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse) return run_parse(raw_path, labels_path, out_prefix, dcfg, wcfg);
        if (*gen) return run_generate(scfg, gen_out);
        if (*spl) return run_split(split_in, split_fraction, split_seed, split_train, split_test);
        if (*train)
            return run_train(train_data, train_config, train_ckpt, train_log, train_eval,
                             train_seed_set ? std::optional<std::uint64_t>(train_seed)
                                            : std::nullopt);
        if (*det) return run_detect(det_data, det_ckpt, det_out);
        if (*eval) return run_evaluate(eval_data, eval_ckpt, eval_out, eval_ks);
        if (*pert) return run_perturb(pert_data, pert_ckpt, pert_out);
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
