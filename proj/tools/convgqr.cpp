// convgqr: conversational generative query reformulation pipeline.
// Subcommands cover the full loop: synth -> index/embed -> train ->
// reformulate -> retrieve -> evaluate -> analyze, plus the ablate driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convgqr/analysis.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/dense.hpp"
#include "convgqr/evaluate.hpp"
#include "convgqr/manifest.hpp"
#include "convgqr/reformulate.hpp"
#include "convgqr/session.hpp"
#include "convgqr/sparse.hpp"
#include "convgqr/synthetic.hpp"
#include "convgqr/tokenize.hpp"
#include "convgqr/toygen.hpp"

namespace fs = std::filesystem;
using namespace convgqr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Collects outputs so the manifest can list every artifact with a digest.
class OutputSet {
public:
    void write(const std::string& path, const std::string& bytes) {
        fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw data_error("cannot open output file: " + path);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw data_error("failed writing output file: " + path);
        entries_.emplace_back(path, content_digest(bytes));
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

void write_manifest_for(const std::string& command, std::uint64_t seed,
                        const nlohmann::json& config, const std::vector<std::string>& inputs,
                        OutputSet& outputs, const std::string& manifest_path) {
    RunManifest manifest;
    manifest.command = command;
    manifest.seed = seed;
    manifest.config = config;
    manifest.inputs = inputs;
    manifest.outputs = outputs.entries();
    fs::path p(manifest_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw data_error("cannot open output file: " + manifest_path);
    out << manifest_to_json(manifest);
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct FormatFlags {
    bool include_answers = false;
    std::size_t max_tokens = 256;

    void attach(CLI::App* cmd) {
        cmd->add_flag("--include-answers", include_answers,
                      "history turns contribute system answers too");
        cmd->add_option("--max-tokens", max_tokens, "input sequence budget")->check(CLI::PositiveNumber);
    }

    FormatConfig config(std::size_t max_src_len) const {
        FormatConfig fmt;
        fmt.include_answers = include_answers;
        fmt.max_tokens = std::min(max_tokens, max_src_len);
        return fmt;
    }
};

struct EncoderFlags {
    std::uint32_t dim = 64;
    std::uint64_t enc_seed = 0;
    std::uint32_t buckets = 4096;

    void attach(CLI::App* cmd, bool seed_required) {
        cmd->add_option("--dim", dim, "embedding dimension")->check(CLI::PositiveNumber);
        auto* s = cmd->add_option("--enc-seed", enc_seed, "frozen projection seed");
        if (seed_required) s->required();
        cmd->add_option("--buckets", buckets, "token hash buckets")->check(CLI::PositiveNumber);
    }

    FrozenEncoderConfig config() const { return {dim, enc_seed, buckets}; }
};

struct ModelFlags {
    std::size_t d_model = 32;
    std::size_t n_heads = 2;
    std::size_t enc_layers = 1;
    std::size_t dec_layers = 1;
    std::size_t max_src_len = 64;
    std::size_t max_gen_len = 32;

    void attach(CLI::App* cmd) {
        cmd->add_option("--d-model", d_model)->check(CLI::PositiveNumber);
        cmd->add_option("--n-heads", n_heads)->check(CLI::PositiveNumber);
        cmd->add_option("--enc-layers", enc_layers);
        cmd->add_option("--dec-layers", dec_layers);
        cmd->add_option("--max-src-len", max_src_len)->check(CLI::PositiveNumber);
        cmd->add_option("--max-gen-len", max_gen_len, "maximum generation length")
            ->check(CLI::PositiveNumber);
    }
};

struct TrainFlags {
    double alpha = 0.5;
    std::string loss = "mse";
    double lr = 1e-3;
    std::size_t batch_size = 8;
    std::size_t steps = 300;
    std::uint64_t seed = 0;
    std::size_t negatives = 4;
    int threshold = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "retrieval loss weight")->check(CLI::NonNegativeNumber);
        cmd->add_option("--loss", loss, "infusion loss kind")
            ->check(CLI::IsMember({"mse", "cl"}));
        cmd->add_option("--lr", lr, "learning rate")->check(CLI::PositiveNumber);
        cmd->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);
        cmd->add_option("--steps", steps, "optimizer steps");
        cmd->add_option("--seed", seed, "training seed")->required();
        cmd->add_option("--negatives", negatives, "CL negatives per example")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threshold", threshold, "relevance threshold for positives")
            ->check(CLI::PositiveNumber);
    }

    TrainConfig config() const {
        TrainConfig tc;
        tc.alpha = alpha;
        tc.loss_kind = loss == "cl" ? InfusionLoss::cl : InfusionLoss::mse;
        tc.learning_rate = lr;
        tc.batch_size = batch_size;
        tc.steps = steps;
        tc.seed = seed;
        tc.negatives_per_example = negatives;
        return tc;
    }
};

// ---------------------------------------------------------------------------
// Training-set assembly
// ---------------------------------------------------------------------------

enum class TargetKind { rewrite, expand };

struct TrainingSet {
    ToyModelConfig config;
    std::vector<TrainingExample> examples;
    std::size_t skipped_no_target = 0;
    std::size_t skipped_no_positive = 0;
};

/// Builds (source, target, h_{p+}, negatives) examples from sessions, qrels,
/// and the passage embedding matrix. Turns without the requested target or
/// without a judged-relevant embedded passage are skipped and counted.
TrainingSet build_training_set(const std::vector<Session>& sessions, const Qrels& qrels,
                               const EmbeddingMatrix& matrix, TargetKind target_kind,
                               const FormatConfig& fmt, const ModelFlags& model,
                               const TrainFlags& train_flags, bool need_negatives) {
    TrainingSet set;
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < matrix.rows(); ++r) row_of[matrix.ids[r]] = r;

    auto embedding_row = [&](std::size_t row) {
        std::vector<double> v(matrix.dim);
        for (std::uint32_t d = 0; d < matrix.dim; ++d)
            v[d] = static_cast<double>(matrix.row(row)[d]);
        return v;
    };

    SplitRng neg_rng(train_flags.seed ^ 0x9e3779b97f4a7c15ULL);
    std::set<std::string> vocab_tokens;
    for (const auto& session : sessions) {
        for (std::size_t i = 1; i <= session.turns.size(); ++i) {
            const Turn& turn = session.turns[i - 1];
            const auto& target_text =
                target_kind == TargetKind::rewrite ? turn.gold_rewrite : turn.gold_answer;
            if (!target_text || tokenize(*target_text).empty()) {
                ++set.skipped_no_target;
                continue;
            }

            std::string qid = query_id_of(session.session_id, turn.turn_id);
            auto jt = qrels.grades.find(qid);
            const std::string* best_pid = nullptr;
            int best_grade = 0;
            std::set<std::string> relevant;
            if (jt != qrels.grades.end()) {
                for (const auto& [pid, grade] : jt->second) {
                    if (grade < train_flags.threshold) continue;
                    relevant.insert(pid);
                    if (!row_of.count(pid)) continue;
                    if (best_pid == nullptr || grade > best_grade ||
                        (grade == best_grade && pid < *best_pid)) {
                        best_pid = &pid;
                        best_grade = grade;
                    }
                }
            }
            if (best_pid == nullptr) {
                ++set.skipped_no_positive;
                continue;
            }

            TrainingExample ex;
            ex.source = format_session(session, i, fmt);
            ex.target = tokenize(*target_text);
            if (ex.target.size() > model.max_gen_len) ex.target.resize(model.max_gen_len);
            ex.positive_embedding = embedding_row(row_of.at(*best_pid));
            if (need_negatives) {
                if (matrix.rows() <= relevant.size())
                    throw data_error("train: no negative passages available for query " + qid);
                while (ex.negative_embeddings.size() < train_flags.negatives) {
                    std::size_t row = static_cast<std::size_t>(neg_rng.next_below(matrix.rows()));
                    if (relevant.count(matrix.ids[row])) continue;
                    ex.negative_embeddings.push_back(embedding_row(row));
                }
            }
            for (const auto& tok : ex.source.tokens) vocab_tokens.insert(tok);
            for (const auto& tok : ex.target) vocab_tokens.insert(tok);
            set.examples.push_back(std::move(ex));
        }
    }

    set.config.vocab = {kClsToken, kSepToken, kPadToken, kBosToken, kEosToken, kUnkToken};
    for (const auto& tok : vocab_tokens) {
        bool special = false;
        for (const auto& sp : set.config.vocab)
            if (tok == sp) special = true;
        if (!special) set.config.vocab.push_back(tok);
    }
    set.config.d_model = model.d_model;
    set.config.n_heads = model.n_heads;
    set.config.n_enc_layers = model.enc_layers;
    set.config.n_dec_layers = model.dec_layers;
    set.config.max_src_len = model.max_src_len;
    set.config.max_gen_len = model.max_gen_len;
    set.config.infusion_dim = matrix.dim;
    return set;
}

std::vector<ReformulatedQuery> reformulate_sessions(const std::vector<Session>& sessions,
                                                    const ToyModelParams& rewriter,
                                                    const ToyModelConfig& rewriter_cfg,
                                                    const ToyModelParams& expander,
                                                    const ToyModelConfig& expander_cfg,
                                                    const FormatConfig& fmt) {
    std::vector<ReformulatedQuery> out;
    for (const auto& session : sessions)
        for (std::size_t i = 1; i <= session.turns.size(); ++i)
            out.push_back(
                reformulate(rewriter, rewriter_cfg, expander, expander_cfg, fmt, session, i));
    return out;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct SynthOpts {
    std::string out_dir;
    std::string kind = "train";
    std::uint64_t seed = 0;
};

int run_synth(const SynthOpts& opt) {
    SyntheticData data =
        opt.kind == "train" ? make_training_dataset(opt.seed) : make_concat_fixture();
    OutputSet outputs;
    fs::path dir(opt.out_dir);
    outputs.write((dir / "sessions.jsonl").string(), write_sessions(data.sessions));
    outputs.write((dir / "passages.tsv").string(), write_passages(data.passages));
    outputs.write((dir / "qrels.txt").string(), write_qrels(data.qrels));
    write_manifest_for("synth", opt.seed, {{"kind", opt.kind}}, {}, outputs,
                       (dir / "manifest.json").string());
    std::printf("synth: %zu sessions, %zu passages, %zu judged queries -> %s\n",
                data.sessions.size(), data.passages.size(), data.qrels.grades.size(),
                opt.out_dir.c_str());
    return kExitOk;
}

struct IndexOpts {
    std::string passages_path;
    std::string out_path;
    Bm25Params bm25;
};

int run_index(const IndexOpts& opt) {
    auto passages = parse_passages(read_file(opt.passages_path));
    InvertedIndex index = build_index(passages);
    OutputSet outputs;
    outputs.write(opt.out_path, write_index(index));
    write_manifest_for("index", 0, {{"k1", opt.bm25.k1}, {"b", opt.bm25.b}},
                       {opt.passages_path}, outputs, opt.out_path + ".manifest.json");
    std::printf("index: %zu docs, %zu terms, avg dl %.2f -> %s\n", index.doc_count(),
                index.postings.size(), index.avg_doc_length, opt.out_path.c_str());
    return kExitOk;
}

struct EmbedOpts {
    std::string passages_path;
    std::string out_path;
    EncoderFlags encoder;
};

int run_embed(const EmbedOpts& opt) {
    auto passages = parse_passages(read_file(opt.passages_path));
    FrozenEncoder encoder(opt.encoder.config());
    EmbeddingMatrix matrix = embed_passages(encoder, passages);
    OutputSet outputs;
    outputs.write(opt.out_path, write_embeddings(matrix));
    write_manifest_for("embed", opt.encoder.enc_seed,
                       {{"dim", opt.encoder.dim}, {"buckets", opt.encoder.buckets}},
                       {opt.passages_path}, outputs, opt.out_path + ".manifest.json");
    std::printf("embed: %zu passages, dim %u -> %s\n", matrix.rows(), matrix.dim,
                opt.out_path.c_str());
    return kExitOk;
}

struct TrainOpts {
    std::string sessions_path;
    std::string qrels_path;
    std::string embeddings_path;  // either this
    std::string passages_path;    // or this (encoded on the fly)
    std::string target = "rewrite";
    std::string out_path;
    FormatFlags format;
    EncoderFlags encoder;
    ModelFlags model;
    TrainFlags train_flags;
};

int run_train(const TrainOpts& opt) {
    auto sessions = parse_sessions(read_file(opt.sessions_path));
    Qrels qrels = parse_qrels(read_file(opt.qrels_path));
    std::vector<std::string> inputs{opt.sessions_path, opt.qrels_path};

    EmbeddingMatrix matrix;
    if (!opt.embeddings_path.empty()) {
        matrix = read_embeddings(read_file(opt.embeddings_path));
        inputs.push_back(opt.embeddings_path);
    } else {
        auto passages = parse_passages(read_file(opt.passages_path));
        matrix = embed_passages(FrozenEncoder(opt.encoder.config()), passages);
        inputs.push_back(opt.passages_path);
    }

    TargetKind kind = opt.target == "rewrite" ? TargetKind::rewrite : TargetKind::expand;
    TrainConfig tc = opt.train_flags.config();
    TrainingSet set =
        build_training_set(sessions, qrels, matrix, kind, opt.format.config(opt.model.max_src_len),
                           opt.model, opt.train_flags, tc.loss_kind == InfusionLoss::cl);
    if (set.examples.empty()) throw data_error("train: no usable training examples");

    ToyModelParams initial = init_params(set.config, tc.seed);
    TrainResult result = train(initial, set.examples, set.config, tc);

    OutputSet outputs;
    outputs.write(opt.out_path, write_checkpoint(set.config, result.params));
    outputs.write(opt.out_path + ".loss.csv", write_loss_log(result.log));
    nlohmann::json cfg{{"target", opt.target},
                       {"alpha", tc.alpha},
                       {"loss", opt.train_flags.loss},
                       {"lr", tc.learning_rate},
                       {"batch_size", tc.batch_size},
                       {"steps", tc.steps},
                       {"d_model", set.config.d_model},
                       {"vocab_size", set.config.vocab.size()},
                       {"examples", set.examples.size()},
                       {"skipped_no_target", set.skipped_no_target},
                       {"skipped_no_positive", set.skipped_no_positive}};
    write_manifest_for("train", tc.seed, cfg, inputs, outputs, opt.out_path + ".manifest.json");

    double first = result.log.empty() ? 0.0 : result.log.front().total;
    double last = result.log.empty() ? 0.0 : result.log.back().total;
    std::printf("train[%s]: %zu examples (skipped %zu no-target, %zu no-positive), "
                "%zu steps, loss %.4f -> %.4f\n",
                opt.target.c_str(), set.examples.size(), set.skipped_no_target,
                set.skipped_no_positive, tc.steps, first, last);
    return kExitOk;
}

struct ReformulateOpts {
    std::string sessions_path;
    std::string rewriter_path;
    std::string expander_path;
    std::string out_path;
    FormatFlags format;
};

int run_reformulate(const ReformulateOpts& opt) {
    auto sessions = parse_sessions(read_file(opt.sessions_path));
    auto [rew_cfg, rew_params] = read_checkpoint(read_file(opt.rewriter_path));
    auto [exp_cfg, exp_params] = read_checkpoint(read_file(opt.expander_path));

    std::size_t max_src = std::min(rew_cfg.max_src_len, exp_cfg.max_src_len);
    auto queries = reformulate_sessions(sessions, rew_params, rew_cfg, exp_params, exp_cfg,
                                        opt.format.config(max_src));
    std::size_t fallbacks = 0;
    for (const auto& rq : queries)
        if (rq.rewrite_fallback) ++fallbacks;

    OutputSet outputs;
    outputs.write(opt.out_path, write_reformulated(queries));
    write_manifest_for("reformulate", 0, {{"rewrite_fallbacks", fallbacks}},
                       {opt.sessions_path, opt.rewriter_path, opt.expander_path}, outputs,
                       opt.out_path + ".manifest.json");
    std::printf("reformulate: %zu queries (%zu rewrite fallbacks) -> %s\n", queries.size(),
                fallbacks, opt.out_path.c_str());
    return kExitOk;
}

struct RetrieveOpts {
    std::string queries_path;
    std::string index_path;       // sparse backend
    std::string embeddings_path;  // dense backend
    std::string out_path;
    std::string form = "concatenation";
    std::size_t depth = 100;
    std::string tag = "convgqr";
    Bm25Params bm25;
    EncoderFlags encoder;
};

QueryForm form_of(const std::string& name) {
    if (name == "rewrite_only") return QueryForm::rewrite_only;
    if (name == "answer_only") return QueryForm::answer_only;
    return QueryForm::concatenation;
}

int run_retrieve(const RetrieveOpts& opt) {
    auto queries = parse_reformulated(read_file(opt.queries_path));
    QueryForm form = form_of(opt.form);
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& rq : queries) texts.emplace_back(rq.query_id, render(rq, form));

    std::vector<std::string> inputs{opt.queries_path};
    Run run;
    if (!opt.index_path.empty()) {
        InvertedIndex index = read_index(read_file(opt.index_path));
        inputs.push_back(opt.index_path);
        run = run_retrieval(texts, Retriever::sparse(std::move(index), opt.bm25), opt.depth,
                            opt.tag);
    } else {
        EmbeddingMatrix matrix = read_embeddings(read_file(opt.embeddings_path));
        inputs.push_back(opt.embeddings_path);
        FrozenEncoderConfig ecfg = opt.encoder.config();
        ecfg.dim = matrix.dim;  // the matrix fixes the dimension
        run = run_retrieval(texts, Retriever::dense(FrozenEncoder(ecfg), std::move(matrix)),
                            opt.depth, opt.tag);
    }

    OutputSet outputs;
    outputs.write(opt.out_path, write_run(run));
    nlohmann::json cfg{{"form", opt.form},
                       {"depth", opt.depth},
                       {"backend", opt.index_path.empty() ? "dense" : "sparse"},
                       {"k1", opt.bm25.k1},
                       {"b", opt.bm25.b}};
    write_manifest_for("retrieve", opt.encoder.enc_seed, cfg, inputs, outputs,
                       opt.out_path + ".manifest.json");
    std::printf("retrieve[%s,%s]: %zu queries -> %s\n",
                opt.index_path.empty() ? "dense" : "sparse", opt.form.c_str(), texts.size(),
                opt.out_path.c_str());
    return kExitOk;
}

struct EvaluateOpts {
    std::string run_path;
    std::string qrels_path;
    std::string baseline_path;  // optional second run for significance testing
    std::string out_path;
    int threshold = 1;
    std::string gain = "linear";
};

int run_evaluate(const EvaluateOpts& opt) {
    Run run = parse_run(read_file(opt.run_path));
    Qrels qrels = parse_qrels(read_file(opt.qrels_path));
    if (qrels.duplicate_warnings)
        std::printf("warning: %zu duplicate qrels pairs (last occurrence kept)\n",
                    qrels.duplicate_warnings);
    EvalConfig config;
    config.rel_threshold = opt.threshold;
    config.gain = opt.gain == "exponential" ? NdcgGain::exponential : NdcgGain::linear;
    EvalReport report = evaluate_run(run, qrels, config);

    std::fputs(format_report_table(report).c_str(), stdout);

    if (!opt.baseline_path.empty()) {
        EvalReport base = evaluate_run(parse_run(read_file(opt.baseline_path)), qrels, config);
        std::printf("paired t-test vs baseline (two-sided, paired by query):\n");
        for (const auto& metric : report.metric_names()) {
            // pair on queries evaluable in both runs
            std::vector<double> a, b;
            for (const auto& [qid, v] : report.per_query.at(metric)) {
                auto it = base.per_query.at(metric).find(qid);
                if (it == base.per_query.at(metric).end()) continue;
                a.push_back(v);
                b.push_back(it->second);
            }
            if (a.size() < 2) {
                std::printf("  %s: fewer than 2 shared queries\n", metric.c_str());
                continue;
            }
            TTestResult t = paired_t_test(a, b);
            std::printf("  %s: n=%zu t=%.4f p=%.6f%s\n", metric.c_str(), a.size(), t.t, t.p,
                        t.zero_variance ? " (zero-variance differences)" : "");
        }
    }

    if (!opt.out_path.empty()) {
        OutputSet outputs;
        outputs.write(opt.out_path, format_report_lines(report));
        write_manifest_for("evaluate", 0,
                           {{"threshold", opt.threshold}, {"gain", opt.gain}},
                           {opt.run_path, opt.qrels_path}, outputs,
                           opt.out_path + ".manifest.json");
    }
    return kExitOk;
}

struct AnalyzeOpts {
    std::string queries_path;
    std::string sessions_path;
    std::string qrels_path;
    std::string passages_path;
    std::string run_path;
    std::string out_path;
    int threshold = 1;
};

int run_analyze(const AnalyzeOpts& opt) {
    auto queries = parse_reformulated(read_file(opt.queries_path));
    auto sessions = parse_sessions(read_file(opt.sessions_path));
    Qrels qrels = parse_qrels(read_file(opt.qrels_path));
    auto passages = parse_passages(read_file(opt.passages_path));
    Run run = parse_run(read_file(opt.run_path));

    std::map<std::string, const Passage*> passage_of;
    for (const auto& p : passages) passage_of[p.passage_id] = &p;
    std::map<std::string, std::string> gold_answer_of;
    for (const auto& session : sessions)
        for (const auto& turn : session.turns)
            if (turn.gold_answer)
                gold_answer_of[query_id_of(session.session_id, turn.turn_id)] = *turn.gold_answer;

    std::vector<GenQualityRecord> records;
    std::size_t missing_gold = 0, skipped = 0;
    for (const auto& rq : queries) {
        auto rt = run.results.find(rq.query_id);
        auto jt = qrels.grades.find(rq.query_id);
        if (rt == run.results.end() || jt == qrels.grades.end()) {
            ++skipped;
            continue;
        }
        // best-case co-occurrence across this query's relevant passages
        std::optional<std::size_t> best_overlap;
        std::optional<double> best_norm;
        for (const auto& [pid, grade] : jt->second) {
            if (grade < opt.threshold) continue;
            auto pp = passage_of.find(pid);
            if (pp == passage_of.end()) continue;
            std::size_t ov = token_overlap(rq.expansion, pp->second->text);
            if (!best_overlap || ov > *best_overlap) best_overlap = ov;
            if (!normalize_tokens(pp->second->text).empty()) {
                double no = normalized_overlap(rq.expansion, pp->second->text);
                if (!best_norm || no > *best_norm) best_norm = no;
            }
        }
        if (!best_overlap || !best_norm) {
            ++skipped;
            continue;
        }

        GenQualityRecord rec;
        rec.query_id = rq.query_id;
        rec.overlap = *best_overlap;
        rec.normalized_overlap = *best_norm;
        auto gold = gold_answer_of.find(rq.query_id);
        if (gold == gold_answer_of.end()) {
            ++missing_gold;
            rec.f1 = 0.0;
        } else {
            rec.f1 = answer_f1(rq.expansion, gold->second);
        }
        std::vector<std::string> ranked;
        for (const auto& d : rt->second) ranked.push_back(d.passage_id);
        rec.mrr = mrr(ranked, jt->second, opt.threshold);
        records.push_back(std::move(rec));
    }

    if (records.size() < 2)
        throw data_error("analyze: need at least 2 analyzable queries, have " +
                         std::to_string(records.size()));
    CorrelationReport report = correlation_report(records);

    std::string summary = format_correlation_report(report);
    std::fputs(summary.c_str(), stdout);
    if (missing_gold)
        std::printf("queries without gold answer (f1=0): %zu\n", missing_gold);
    if (skipped) std::printf("queries skipped (no run/qrels/passage): %zu\n", skipped);

    OutputSet outputs;
    outputs.write(opt.out_path, write_quality_records(records));
    outputs.write(opt.out_path + ".pcc.txt", summary);
    write_manifest_for("analyze", 0, {{"threshold", opt.threshold}},
                       {opt.queries_path, opt.sessions_path, opt.qrels_path, opt.passages_path,
                        opt.run_path},
                       outputs, opt.out_path + ".manifest.json");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Ablation driver: 2x2 {expansion on/off} x {infusion on/off} + query forms
// ---------------------------------------------------------------------------

struct AblateOpts {
    std::string sessions_path;
    std::string passages_path;
    std::string qrels_path;
    std::string out_dir;
    std::size_t depth = 100;
    Bm25Params bm25;
    FormatFlags format;
    EncoderFlags encoder;
    ModelFlags model;
    TrainFlags train_flags;
    std::string gain = "linear";
};

int run_ablate(const AblateOpts& opt) {
    auto sessions = parse_sessions(read_file(opt.sessions_path));
    auto passages = parse_passages(read_file(opt.passages_path));
    Qrels qrels = parse_qrels(read_file(opt.qrels_path));
    fs::path dir(opt.out_dir);
    OutputSet outputs;

    InvertedIndex index = build_index(passages);
    FrozenEncoder encoder(opt.encoder.config());
    EmbeddingMatrix matrix = embed_passages(encoder, passages);
    Retriever sparse = Retriever::sparse(index, opt.bm25);
    Retriever dense = Retriever::dense(encoder, matrix);

    FormatConfig fmt = opt.format.config(opt.model.max_src_len);
    TrainConfig infused = opt.train_flags.config();
    TrainConfig control = infused;
    control.alpha = 0.0;

    bool need_negs = infused.loss_kind == InfusionLoss::cl;
    TrainingSet rewrite_set = build_training_set(sessions, qrels, matrix, TargetKind::rewrite,
                                                 fmt, opt.model, opt.train_flags, need_negs);
    TrainingSet expand_set = build_training_set(sessions, qrels, matrix, TargetKind::expand, fmt,
                                                opt.model, opt.train_flags, need_negs);
    if (rewrite_set.examples.empty() || expand_set.examples.empty())
        throw data_error("ablate: empty training set (check gold targets and qrels)");

    auto train_model = [&](const TrainingSet& set, const TrainConfig& tc, const char* name) {
        TrainResult r = train(init_params(set.config, tc.seed), set.examples, set.config, tc);
        outputs.write((dir / (std::string(name) + ".loss.csv")).string(), write_loss_log(r.log));
        return r.params;
    };
    ToyModelParams rew_inf = train_model(rewrite_set, infused, "rewriter_infused");
    ToyModelParams rew_ctl = train_model(rewrite_set, control, "rewriter_control");
    ToyModelParams exp_inf = train_model(expand_set, infused, "expander_infused");
    ToyModelParams exp_ctl = train_model(expand_set, control, "expander_control");

    auto queries_inf = reformulate_sessions(sessions, rew_inf, rewrite_set.config, exp_inf,
                                            expand_set.config, fmt);
    auto queries_ctl = reformulate_sessions(sessions, rew_ctl, rewrite_set.config, exp_ctl,
                                            expand_set.config, fmt);
    outputs.write((dir / "queries_infused.tsv").string(), write_reformulated(queries_inf));
    outputs.write((dir / "queries_control.tsv").string(), write_reformulated(queries_ctl));

    EvalConfig eval_config;
    eval_config.rel_threshold = opt.train_flags.threshold;
    eval_config.gain = opt.gain == "exponential" ? NdcgGain::exponential : NdcgGain::linear;

    auto evaluate_variant = [&](const std::vector<ReformulatedQuery>& qs, QueryForm form,
                                const Retriever& retriever, const std::string& run_name) {
        std::vector<std::pair<std::string, std::string>> texts;
        for (const auto& rq : qs) texts.emplace_back(rq.query_id, render(rq, form));
        Run run = run_retrieval(texts, retriever, opt.depth, run_name);
        outputs.write((dir / ("run_" + run_name + ".txt")).string(), write_run(run));
        return evaluate_run(run, qrels, eval_config);
    };

    const std::vector<std::string> metric_names{"mrr", "ndcg@3", "recall@10", "recall@100"};
    auto row_line = [&](const std::string& label, const EvalReport& s, const EvalReport& d) {
        char buf[256];
        std::string line = label;
        for (const auto& m : metric_names) {
            std::snprintf(buf, sizeof(buf), "\t%.4f", s.macro.at(m));
            line += buf;
        }
        for (const auto& m : metric_names) {
            std::snprintf(buf, sizeof(buf), "\t%.4f", d.macro.at(m));
            line += buf;
        }
        return line + "\n";
    };

    std::string table;
    table += "# ablation: variant\tsparse[mrr ndcg@3 r@10 r@100]\tdense[mrr ndcg@3 r@10 r@100]\n";
    struct VariantSpec {
        const char* label;
        const std::vector<ReformulatedQuery>* queries;
        QueryForm form;
    };
    const VariantSpec variants[] = {
        {"full", &queries_inf, QueryForm::concatenation},
        {"-infusion", &queries_ctl, QueryForm::concatenation},
        {"-expansion", &queries_inf, QueryForm::rewrite_only},
        {"-both", &queries_ctl, QueryForm::rewrite_only},
    };
    for (const auto& v : variants) {
        std::string name = v.label[0] == '-' ? std::string("ablation_minus_") + (v.label + 1)
                                             : "ablation_" + std::string(v.label);
        EvalReport s = evaluate_variant(*v.queries, v.form, sparse, name + "_sparse");
        EvalReport d = evaluate_variant(*v.queries, v.form, dense, name + "_dense");
        table += row_line(v.label, s, d);
    }

    table += "# query forms (infused models)\n";
    for (QueryForm form :
         {QueryForm::rewrite_only, QueryForm::answer_only, QueryForm::concatenation}) {
        std::string name = std::string("form_") + query_form_name(form);
        EvalReport s = evaluate_variant(queries_inf, form, sparse, name + "_sparse");
        EvalReport d = evaluate_variant(queries_inf, form, dense, name + "_dense");
        table += row_line(query_form_name(form), s, d);
    }

    outputs.write((dir / "ablation.tsv").string(), table);
    nlohmann::json cfg{{"alpha", infused.alpha},
                       {"loss", opt.train_flags.loss},
                       {"steps", infused.steps},
                       {"depth", opt.depth},
                       {"threshold", opt.train_flags.threshold},
                       {"dim", opt.encoder.dim}};
    write_manifest_for("ablate", infused.seed, cfg,
                       {opt.sessions_path, opt.passages_path, opt.qrels_path}, outputs,
                       (dir / "manifest.json").string());
    std::fputs(table.c_str(), stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conversational generative query reformulation laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth", "write a bundled synthetic dataset");
    synth->add_option("--out", synth_opts.out_dir, "output directory")->required();
    synth->add_option("--kind", synth_opts.kind, "dataset kind")
        ->check(CLI::IsMember({"train", "concat"}));
    synth->add_option("--seed", synth_opts.seed, "generator seed")->required();

    IndexOpts index_opts;
    auto* index = app.add_subcommand("index", "build a BM25 inverted index");
    index->add_option("--passages", index_opts.passages_path)->required();
    index->add_option("--out", index_opts.out_path)->required();
    index->add_option("--k1", index_opts.bm25.k1)->check(CLI::NonNegativeNumber);
    index->add_option("--b", index_opts.bm25.b)->check(CLI::Range(0.0, 1.0));

    EmbedOpts embed_opts;
    auto* embed = app.add_subcommand("embed", "encode passages with the frozen encoder");
    embed->add_option("--passages", embed_opts.passages_path)->required();
    embed->add_option("--out", embed_opts.out_path)->required();
    embed_opts.encoder.attach(embed, /*seed_required=*/true);

    TrainOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "train a rewriting or expansion model");
    train_cmd->add_option("--sessions", train_opts.sessions_path)->required();
    train_cmd->add_option("--qrels", train_opts.qrels_path)->required();
    auto* emb_opt = train_cmd->add_option("--embeddings", train_opts.embeddings_path,
                                          "precomputed passage embeddings");
    train_cmd->add_option("--passages", train_opts.passages_path, "encode passages on the fly")
        ->excludes(emb_opt);
    train_cmd->add_option("--target", train_opts.target)
        ->check(CLI::IsMember({"rewrite", "expand"}))
        ->required();
    train_cmd->add_option("--out", train_opts.out_path)->required();
    train_opts.format.attach(train_cmd);
    train_opts.encoder.attach(train_cmd, /*seed_required=*/false);
    train_opts.model.attach(train_cmd);
    train_opts.train_flags.attach(train_cmd);

    ReformulateOpts ref_opts;
    auto* ref = app.add_subcommand("reformulate", "generate rewrites and expansions");
    ref->add_option("--sessions", ref_opts.sessions_path)->required();
    ref->add_option("--rewriter", ref_opts.rewriter_path)->required();
    ref->add_option("--expander", ref_opts.expander_path)->required();
    ref->add_option("--out", ref_opts.out_path)->required();
    ref_opts.format.attach(ref);

    RetrieveOpts ret_opts;
    auto* ret = app.add_subcommand("retrieve", "run sparse or dense retrieval");
    ret->add_option("--queries", ret_opts.queries_path)->required();
    auto* idx_opt = ret->add_option("--index", ret_opts.index_path, "sparse index file");
    ret->add_option("--embeddings", ret_opts.embeddings_path, "dense embedding file")
        ->excludes(idx_opt);
    ret->add_option("--out", ret_opts.out_path)->required();
    ret->add_option("--form", ret_opts.form)
        ->check(CLI::IsMember({"rewrite_only", "answer_only", "concatenation"}));
    ret->add_option("--depth", ret_opts.depth)->check(CLI::PositiveNumber);
    ret->add_option("--tag", ret_opts.tag);
    ret->add_option("--k1", ret_opts.bm25.k1)->check(CLI::NonNegativeNumber);
    ret->add_option("--b", ret_opts.bm25.b)->check(CLI::Range(0.0, 1.0));
    ret_opts.encoder.attach(ret, /*seed_required=*/false);

    EvaluateOpts eval_opts;
    auto* eval = app.add_subcommand("evaluate", "compute retrieval metrics");
    eval->add_option("--run", eval_opts.run_path)->required();
    eval->add_option("--qrels", eval_opts.qrels_path)->required();
    eval->add_option("--baseline", eval_opts.baseline_path,
                     "second run; reports paired t-tests per metric");
    eval->add_option("--out", eval_opts.out_path, "metric lines output");
    eval->add_option("--threshold", eval_opts.threshold)->check(CLI::PositiveNumber);
    eval->add_option("--gain", eval_opts.gain)->check(CLI::IsMember({"linear", "exponential"}));

    AnalyzeOpts ana_opts;
    auto* ana = app.add_subcommand("analyze", "correlate generation quality with MRR");
    ana->add_option("--queries", ana_opts.queries_path)->required();
    ana->add_option("--sessions", ana_opts.sessions_path)->required();
    ana->add_option("--qrels", ana_opts.qrels_path)->required();
    ana->add_option("--passages", ana_opts.passages_path)->required();
    ana->add_option("--run", ana_opts.run_path)->required();
    ana->add_option("--out", ana_opts.out_path)->required();
    ana->add_option("--threshold", ana_opts.threshold)->check(CLI::PositiveNumber);

    AblateOpts abl_opts;
    auto* abl = app.add_subcommand("ablate", "2x2 ablation plus query-form comparison");
    abl->add_option("--sessions", abl_opts.sessions_path)->required();
    abl->add_option("--passages", abl_opts.passages_path)->required();
    abl->add_option("--qrels", abl_opts.qrels_path)->required();
    abl->add_option("--out", abl_opts.out_dir, "output directory")->required();
    abl->add_option("--depth", abl_opts.depth)->check(CLI::PositiveNumber);
    abl->add_option("--gain", abl_opts.gain)->check(CLI::IsMember({"linear", "exponential"}));
    abl->add_option("--k1", abl_opts.bm25.k1)->check(CLI::NonNegativeNumber);
    abl->add_option("--b", abl_opts.bm25.b)->check(CLI::Range(0.0, 1.0));
    abl_opts.format.attach(abl);
    abl_opts.encoder.attach(abl, /*seed_required=*/false);
    abl_opts.model.attach(abl);
    abl_opts.train_flags.attach(abl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*synth) return run_synth(synth_opts);
        if (*index) return run_index(index_opts);
        if (*embed) return run_embed(embed_opts);
        if (*train_cmd) {
            if (train_opts.embeddings_path.empty() && train_opts.passages_path.empty())
                throw data_error("train: need --embeddings or --passages");
            return run_train(train_opts);
        }
        if (*ref) return run_reformulate(ref_opts);
        if (*ret) {
            if (ret_opts.index_path.empty() && ret_opts.embeddings_path.empty())
                throw data_error("retrieve: need --index or --embeddings");
            return run_retrieve(ret_opts);
        }
        if (*eval) return run_evaluate(eval_opts);
        if (*ana) return run_analyze(ana_opts);
        if (*abl) return run_ablate(abl_opts);
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
