// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fail.
// Usage: acceptance <path-to-convgqr-cli>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "convgqr/analysis.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/dense.hpp"
#include "convgqr/evaluate.hpp"
#include "convgqr/reformulate.hpp"
#include "convgqr/session.hpp"
#include "convgqr/sparse.hpp"
#include "convgqr/synthetic.hpp"
#include "convgqr/tokenize.hpp"
#include "convgqr/toygen.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace convgqr;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %2d: %s (%s; %.2fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), seconds);
    if (!pass) ++g_failures;
}

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    auto start = Clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto [ok, msg] = body();
        pass = ok;
        detail = msg;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report(id, name, pass, detail, seconds);
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

ToyModelConfig small_model_config() {
    ToyModelConfig cfg;
    cfg.vocab = {"[CLS]", "[SEP]", "[PAD]", "[BOS]", "[EOS]", "[UNK]", "boer", "goat",
                 "meat",  "breed", "what",  "is",    "good",  "for",   "tell", "me"};
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.max_src_len = 16;
    cfg.max_gen_len = 8;
    cfg.infusion_dim = 6;
    return cfg;
}

TrainingExample small_example(const ToyModelConfig& cfg, SplitRng& rng) {
    TrainingExample ex;
    ex.source.tokens = {"[CLS]", "what", "breed", "is", "good", "for", "meat", "[SEP]"};
    ex.target = {"boer", "goat"};
    ex.positive_embedding.resize(cfg.infusion_dim);
    for (auto& x : ex.positive_embedding) x = rng.next_double(-1, 1);
    for (int n = 0; n < 3; ++n) {
        std::vector<double> neg(cfg.infusion_dim);
        for (auto& x : neg) x = rng.next_double(-1, 1);
        ex.negative_embeddings.push_back(std::move(neg));
    }
    return ex;
}

struct ExpanderSetup {
    ToyModelConfig config;
    std::vector<TrainingExample> examples;
};

/// Expander training set over the bundled synthetic dataset.
ExpanderSetup expander_setup(const SyntheticData& data, const EmbeddingMatrix& matrix) {
    ExpanderSetup setup;
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < matrix.rows(); ++r) row_of[matrix.ids[r]] = r;
    std::set<std::string> vocab_tokens;
    for (const auto& s : data.sessions) {
        for (std::size_t i = 1; i <= s.turns.size(); ++i) {
            const Turn& t = s.turns[i - 1];
            TrainingExample ex;
            ex.source = format_session(s, i, {});
            ex.target = tokenize(*t.gold_answer);
            std::string qid = query_id_of(s.session_id, t.turn_id);
            std::size_t row = row_of.at(data.qrels.grades.at(qid).begin()->first);
            ex.positive_embedding.resize(matrix.dim);
            for (std::uint32_t d = 0; d < matrix.dim; ++d)
                ex.positive_embedding[d] = matrix.row(row)[d];
            for (const auto& tok : ex.source.tokens) vocab_tokens.insert(tok);
            for (const auto& tok : ex.target) vocab_tokens.insert(tok);
            setup.examples.push_back(std::move(ex));
        }
    }
    setup.config.vocab = {kClsToken, kSepToken, kPadToken, kBosToken, kEosToken, kUnkToken};
    for (const auto& tok : vocab_tokens) {
        bool special = false;
        for (const auto& sp : setup.config.vocab)
            if (tok == sp) special = true;
        if (!special) setup.config.vocab.push_back(tok);
    }
    setup.config.infusion_dim = matrix.dim;
    return setup;
}

std::vector<ReformulatedQuery> oracle_queries(const SyntheticData& data) {
    std::vector<ReformulatedQuery> rqs;
    for (const auto& s : data.sessions) {
        ReformulatedQuery rq;
        rq.query_id = query_id_of(s.session_id, s.turns[0].turn_id);
        rq.rewrite = *s.turns[0].gold_rewrite;
        rq.expansion = *s.turns[0].gold_answer;
        rqs.push_back(std::move(rq));
    }
    return rqs;
}

Run retrieve_form(const std::vector<ReformulatedQuery>& rqs, const Retriever& retriever,
                  QueryForm form) {
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& rq : rqs) texts.emplace_back(rq.query_id, render(rq, form));
    return run_retrieval(texts, retriever, 100);
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

std::pair<bool, std::string> criterion_metric_oracle() {
    SplitRng rng(424242);
    EvalConfig config;
    double worst = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        auto inst = oracle::random_eval_instance(rng, 5, 20, 3);
        EvalReport report = evaluate_run(inst.run, inst.qrels, config);
        for (const auto& [qid, docs] : inst.run.results) {
            auto jt = inst.qrels.grades.find(qid);
            if (jt == inst.qrels.grades.end()) continue;
            std::vector<std::string> ids;
            for (const auto& d : docs) ids.push_back(d.passage_id);
            double oracle_r10 = oracle::recall(ids, jt->second, 10, 1);
            if (oracle_r10 < 0.0) continue;  // undefined query
            auto check = [&](const char* metric, double expected) {
                double got = report.per_query.at(metric).at(qid);
                worst = std::max(worst, std::fabs(got - expected));
            };
            check("mrr", oracle::mrr(ids, jt->second, 1));
            check("ndcg@3", oracle::ndcg(ids, jt->second, 3, false));
            check("recall@10", oracle_r10);
            check("recall@100", oracle::recall(ids, jt->second, 100, 1));
            // exponential gain route as well
            EvalConfig exp_cfg;
            exp_cfg.gain = NdcgGain::exponential;
            EvalReport exp_report = evaluate_run(inst.run, inst.qrels, exp_cfg);
            worst = std::max(worst, std::fabs(exp_report.per_query.at("ndcg@3").at(qid) -
                                              oracle::ndcg(ids, jt->second, 3, true)));
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |lib - oracle| = %.2e over 200 instances", worst);
    return {worst < 1e-9, buf};
}

std::pair<bool, std::string> criterion_bm25() {
    SplitRng rng(10101);
    Bm25Params params;
    static const char* words[] = {"goat", "sheep", "meat", "milk", "farm", "breed",
                                  "graze", "wool", "horn", "herd", "barn", "field"};
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<Passage> corpus;
        std::size_t n = 1 + rng.next_below(200);
        for (std::size_t d = 0; d < n; ++d) {
            std::string text;
            std::size_t len = 1 + rng.next_below(25);
            for (std::size_t w = 0; w < len; ++w) {
                if (w) text += " ";
                text += words[rng.next_below(12)];
            }
            corpus.push_back({"p" + std::to_string(d), text});
        }
        InvertedIndex idx = build_index(corpus);
        std::vector<std::string> query;
        for (std::size_t i = 0; i <= rng.next_below(3); ++i)
            query.push_back(words[rng.next_below(12)]);

        std::vector<ScoredDoc> brute;
        for (std::uint32_t d = 0; d < idx.doc_count(); ++d) {
            double s = bm25_score(idx, params, query, d);
            if (s > 0.0) brute.push_back({idx.doc_ids[d], s});
        }
        std::sort(brute.begin(), brute.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.passage_id < b.passage_id;
        });
        if (search_sparse(idx, params, query, idx.doc_count() + 1) != brute)
            return {false, "exhaustive oracle mismatch at corpus " + std::to_string(iter)};
    }

    // hand fixture: N=3, df=2, tf=1, dl=avgdl
    InvertedIndex idx = build_index({{"pa", "the goat eats grass"},
                                     {"pb", "goat breeds for meat"},
                                     {"pc", "sheep graze on hills"}});
    double expected = std::log(1.0 + 1.5 / 2.5);
    double got = bm25_score(idx, params, {"goat"}, 0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "oracle equal on 100 corpora; fixture |err|=%.2e",
                  std::fabs(got - expected));
    return {std::fabs(got - expected) < 1e-9, buf};
}

std::pair<bool, std::string> criterion_grad_check() {
    ToyModelConfig cfg = small_model_config();
    ParamLayout layout(cfg);
    if (layout.total() > 20000) return {false, "model exceeds 20k params"};
    SplitRng rng(9999);
    ToyModelParams params = init_params(cfg, 33);
    TrainingExample ex = small_example(cfg, rng);

    double worst = 0.0;
    for (InfusionLoss kind : {InfusionLoss::mse, InfusionLoss::cl}) {
        for (double alpha : {0.0, 0.5, 2.0}) {
            TrainConfig tc;
            tc.loss_kind = kind;
            tc.alpha = alpha;
            worst = std::max(worst, grad_check(params, cfg, ex, tc, 1e-5));
        }
    }

    ToyModelParams zero;
    zero.theta.assign(layout.total(), 0.0);
    double v = static_cast<double>(cfg.vocab.size());
    double nll = loss_gen(zero, cfg, ex.source.tokens, ex.target);
    double nll_err = std::fabs(nll - 3.0 * std::log(v));  // 2 tokens + terminator

    char buf[96];
    std::snprintf(buf, sizeof(buf), "max rel grad err %.2e; uniform NLL |err|=%.2e", worst,
                  nll_err);
    return {worst < 1e-4 && nll_err < 1e-9, buf};
}

std::pair<bool, std::string> criterion_additivity() {
    ToyModelConfig cfg = small_model_config();
    SplitRng rng(2024);
    double worst_ulps = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        ToyModelParams params = init_params(cfg, rng.next_u64());
        TrainingExample ex = small_example(cfg, rng);
        TrainConfig tc;
        tc.loss_kind = rng.next_below(2) ? InfusionLoss::cl : InfusionLoss::mse;
        double alphas[] = {0.0, 0.5, 2.0, rng.next_double(0.0, 3.0)};
        tc.alpha = alphas[rng.next_below(4)];
        LossBreakdown b = combined_loss(params, cfg, ex, tc);
        double lhs = b.total - b.gen;
        double rhs = tc.alpha * b.ret;
        double scale = std::max({std::fabs(b.total), std::fabs(b.gen), std::fabs(rhs), 1.0});
        double ulps = std::fabs(lhs - rhs) / (std::numeric_limits<double>::epsilon() * scale);
        worst_ulps = std::max(worst_ulps, ulps);
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "worst deviation %.2f ulp over 1000 evals", worst_ulps);
    return {worst_ulps <= 4.0, buf};
}

std::pair<bool, std::string> criterion_infusion_effect() {
    SyntheticData data = make_training_dataset(7);
    if (data.sessions.size() != 40 || data.passages.size() != 200)
        return {false, "unexpected dataset shape"};
    FrozenEncoderConfig ecfg;
    ecfg.seed = 7;
    FrozenEncoder enc(ecfg);
    EmbeddingMatrix matrix = embed_passages(enc, data.passages);
    ExpanderSetup setup = expander_setup(data, matrix);

    double mse_infused = 0.0, mse_control = 0.0, gen_ratio = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        for (double alpha : {0.5, 0.0}) {
            TrainConfig tc;
            tc.alpha = alpha;
            tc.loss_kind = InfusionLoss::mse;
            tc.steps = 300;
            tc.seed = seed;
            TrainResult r = train(init_params(setup.config, seed), setup.examples, setup.config,
                                  tc);
            double mse_sum = 0.0;
            for (const auto& ex : setup.examples) {
                auto h = encode(r.params, setup.config, ex.source.tokens).h_s;
                mse_sum += loss_mse(h, ex.positive_embedding);
            }
            double mse = mse_sum / static_cast<double>(setup.examples.size());
            if (alpha > 0.0) {
                mse_infused += mse / 3.0;
                gen_ratio += (r.log.back().gen / r.log.front().gen) / 3.0;
            } else {
                mse_control += mse / 3.0;
            }
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "mean MSE %.4f (infused) vs %.4f (control); gen ratio %.3f",
                  mse_infused, mse_control, gen_ratio);
    return {mse_infused < mse_control && gen_ratio < 0.5, buf};
}

std::pair<bool, std::string> criterion_concat_benefit() {
    SyntheticData data = make_concat_fixture();
    Retriever sparse = Retriever::sparse(build_index(data.passages), {});
    FrozenEncoderConfig ecfg;
    ecfg.seed = 7;
    FrozenEncoder enc(ecfg);
    Retriever dense = Retriever::dense(enc, embed_passages(enc, data.passages));
    auto rqs = oracle_queries(data);
    EvalConfig ec;

    double mrr_sparse_rw =
        evaluate_run(retrieve_form(rqs, sparse, QueryForm::rewrite_only), data.qrels, ec)
            .macro.at("mrr");
    double mrr_sparse_cat =
        evaluate_run(retrieve_form(rqs, sparse, QueryForm::concatenation), data.qrels, ec)
            .macro.at("mrr");
    double mrr_dense_rw =
        evaluate_run(retrieve_form(rqs, dense, QueryForm::rewrite_only), data.qrels, ec)
            .macro.at("mrr");
    double mrr_dense_cat =
        evaluate_run(retrieve_form(rqs, dense, QueryForm::concatenation), data.qrels, ec)
            .macro.at("mrr");

    char buf[128];
    std::snprintf(buf, sizeof(buf), "sparse %.4f>%.4f, dense %.4f>%.4f", mrr_sparse_cat,
                  mrr_sparse_rw, mrr_dense_cat, mrr_dense_rw);
    return {mrr_sparse_cat > mrr_sparse_rw && mrr_dense_cat > mrr_dense_rw, buf};
}

std::pair<bool, std::string> criterion_correlation() {
    // constructed records with a known closed-form PCC
    std::vector<GenQualityRecord> records;
    std::vector<double> xs_overlap, xs_norm, xs_f1, ys;
    SplitRng rng(31337);
    for (int i = 0; i < 40; ++i) {
        GenQualityRecord r;
        r.query_id = "q" + std::to_string(i);
        r.overlap = rng.next_below(12);
        r.normalized_overlap = rng.next_double(0, 1);
        r.f1 = rng.next_double(0, 1);
        r.mrr = rng.next_double(0, 1);
        records.push_back(r);
        xs_overlap.push_back(static_cast<double>(r.overlap));
        xs_norm.push_back(r.normalized_overlap);
        xs_f1.push_back(r.f1);
        ys.push_back(r.mrr);
    }
    CorrelationReport rep = correlation_report(records);
    double worst = std::max(
        {std::fabs(*rep.pcc_overlap - oracle::pearson_direct(xs_overlap, ys)),
         std::fabs(*rep.pcc_norm_overlap - oracle::pearson_direct(xs_norm, ys)),
         std::fabs(*rep.pcc_f1 - oracle::pearson_direct(xs_f1, ys))});
    if (worst >= 1e-9) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "oracle deviation %.2e", worst);
        return {false, buf};
    }

    // end-to-end on the concatenation fixture: overlap must correlate
    // positively with MRR by construction
    SyntheticData data = make_concat_fixture();
    Retriever sparse = Retriever::sparse(build_index(data.passages), {});
    auto rqs = oracle_queries(data);
    Run run = retrieve_form(rqs, sparse, QueryForm::concatenation);
    std::map<std::string, const Passage*> passage_of;
    for (const auto& p : data.passages) passage_of[p.passage_id] = &p;
    std::vector<GenQualityRecord> end_records;
    for (const auto& rq : rqs) {
        GenQualityRecord rec;
        rec.query_id = rq.query_id;
        const auto& judged = data.qrels.grades.at(rq.query_id);
        const Passage* rel = passage_of.at(judged.begin()->first);
        rec.overlap = token_overlap(rq.expansion, rel->text);
        rec.normalized_overlap = normalized_overlap(rq.expansion, rel->text);
        rec.f1 = answer_f1(rq.expansion, rq.expansion);
        std::vector<std::string> ranked;
        for (const auto& d : run.results.at(rq.query_id)) ranked.push_back(d.passage_id);
        rec.mrr = mrr(ranked, judged, 1);
        end_records.push_back(std::move(rec));
    }
    CorrelationReport end_rep = correlation_report(end_records);
    if (!end_rep.pcc_overlap.has_value()) return {false, "overlap column constant end-to-end"};
    char buf[96];
    std::snprintf(buf, sizeof(buf), "oracle dev %.1e; end-to-end pcc_overlap %.4f", worst,
                  *end_rep.pcc_overlap);
    return {*end_rep.pcc_overlap > 0.0, buf};
}

std::pair<bool, std::string> criterion_determinism(const std::string& cli) {
    fs::path base = fs::temp_directory_path() / "convgqr_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    auto sh = [&](const std::string& cmd) {
        std::string full = cmd + " > /dev/null 2>&1";
        return std::system(full.c_str());
    };
    std::string data = (base / "data").string();
    if (sh("\"" + cli + "\" synth --out " + data + " --kind train --seed 7") != 0)
        return {false, "synth failed"};
    for (const char* out : {"a1", "a2"}) {
        std::string cmd = "\"" + cli + "\" ablate --sessions " + data + "/sessions.jsonl" +
                          " --passages " + data + "/passages.tsv --qrels " + data +
                          "/qrels.txt --out " + (base / out).string() +
                          " --seed 7 --steps 40 --enc-seed 7";
        if (sh(cmd) != 0) return {false, std::string("ablate run failed: ") + out};
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(base / "a1")) {
        std::string name = entry.path().filename().string();
        if (name == "manifest.json") continue;  // carries a timestamp
        if (read_all(entry.path()) != read_all(base / "a2" / name))
            return {false, "outputs differ: " + name};
        ++compared;
    }
    // manifests embed their own output paths and a timestamp; the
    // deterministic content is the per-file digest map
    auto digest_map = [&](const fs::path& manifest_path) {
        nlohmann::json j = nlohmann::json::parse(read_all(manifest_path));
        std::map<std::string, std::string> digests;
        for (const auto& entry : j.at("outputs"))
            digests[fs::path(entry.at("path").get<std::string>()).filename().string()] =
                entry.at("digest").get<std::string>();
        return digests;
    };
    if (digest_map(base / "a1" / "manifest.json") != digest_map(base / "a2" / "manifest.json"))
        return {false, "manifest digests differ"};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu output files byte-identical", compared);
    return {compared >= 20, buf};
}

std::pair<bool, std::string> criterion_format_fidelity() {
    // run round trip at 6-decimal score formatting
    SplitRng rng(55);
    Run run;
    run.tag = "fid";
    for (int q = 0; q < 20; ++q) {
        double score = 100.0;
        for (int d = 0; d < 5; ++d) {
            score -= static_cast<double>(1 + rng.next_below(64)) / 64.0;
            run.results["q" + std::to_string(q)].push_back({"p" + std::to_string(d), score});
        }
    }
    if (parse_run(write_run(run)).results != run.results) return {false, "run round trip"};

    Qrels qrels = parse_qrels("q1 0 p1 2\nq2 0 p2 1\n");
    if (parse_qrels(write_qrels(qrels)).grades != qrels.grades)
        return {false, "qrels round trip"};

    EmbeddingMatrix m;
    m.dim = 4;
    m.ids = {"pa", "pb"};
    m.vectors = {1.f, 2.f, 3.f, 4.f, -1.f, 0.5f, 0.25f, 8.f};
    std::string emb_bytes = write_embeddings(m);
    EmbeddingMatrix m2 = read_embeddings(emb_bytes);
    if (write_embeddings(m2) != emb_bytes) return {false, "embedding round trip not bit-exact"};

    ToyModelConfig cfg = small_model_config();
    ToyModelParams params = init_params(cfg, 3);
    std::string ckpt = write_checkpoint(cfg, params);
    auto [cfg2, params2] = read_checkpoint(ckpt);
    if (write_checkpoint(cfg2, params2) != ckpt) return {false, "checkpoint round trip"};

    InvertedIndex idx = build_index({{"pa", "goat farm"}, {"pb", "sheep wool"}});
    std::string idx_bytes = write_index(idx);
    if (write_index(read_index(idx_bytes)) != idx_bytes) return {false, "index round trip"};

    // corruption must raise data_error (the CLI's exit-2 class), with
    // magic/truncation/count distinguished in the message
    int rejected = 0;
    auto expect_reject = [&rejected](auto fn, const char* what) {
        try {
            fn();
            std::fprintf(stderr, "corruption accepted: %s\n", what);
        } catch (const data_error&) {
            ++rejected;
        }
    };
    std::string bad_magic = emb_bytes;
    bad_magic[0] = 'X';
    expect_reject([&] { read_embeddings(bad_magic); }, "embedding magic");
    expect_reject([&] { read_embeddings(emb_bytes.substr(0, emb_bytes.size() - 1)); },
                  "embedding truncation");
    expect_reject([&] { read_embeddings(emb_bytes + "pc\n"); }, "embedding id count");
    expect_reject([&] { read_checkpoint(ckpt.substr(0, ckpt.size() - 4)); },
                  "checkpoint truncation");
    std::string bad_ckpt = ckpt;
    bad_ckpt[2] = 'z';
    expect_reject([&] { read_checkpoint(bad_ckpt); }, "checkpoint magic");
    expect_reject([&] { read_index(idx_bytes.substr(0, idx_bytes.size() - 2)); },
                  "index truncation");
    expect_reject([&] { parse_run("q1 Q0 p1 0 1.000000 t\n"); }, "run rank 0");
    expect_reject([&] { parse_qrels("q1 0 p1 -3\n"); }, "negative grade");

    char buf[64];
    std::snprintf(buf, sizeof(buf), "round trips ok, %d/8 corruptions rejected", rejected);
    return {rejected == 8, buf};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-convgqr-cli>\n");
        return 2;
    }
    std::string cli = argv[1];
    auto suite_start = Clock::now();

    run_criterion(1, "metric oracle equivalence", criterion_metric_oracle);
    run_criterion(2, "bm25 correctness", criterion_bm25);
    run_criterion(3, "gradient check", criterion_grad_check);
    run_criterion(4, "loss additivity", criterion_additivity);
    run_criterion(5, "knowledge-infusion effect", criterion_infusion_effect);
    run_criterion(6, "concatenation benefit", criterion_concat_benefit);
    run_criterion(7, "correlation analysis", criterion_correlation);
    run_criterion(8, "ablate determinism", [&] { return criterion_determinism(cli); });
    run_criterion(9, "format fidelity", criterion_format_fidelity);

    double total = std::chrono::duration<double>(Clock::now() - suite_start).count();
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "suite wall time %.1fs, offline", total);
        report(10, "suite runtime bound", total < 300.0, buf, total);
    }

    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
