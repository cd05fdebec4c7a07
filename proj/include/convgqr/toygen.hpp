#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/session.hpp"

namespace convgqr {

inline constexpr const char* kPadToken = "[PAD]";
inline constexpr const char* kBosToken = "[BOS]";
inline constexpr const char* kEosToken = "[EOS]";
inline constexpr const char* kUnkToken = "[UNK]";

// ---------------------------------------------------------------------------
// Configuration and parameter layout
// ---------------------------------------------------------------------------

struct ToyModelConfig {
    std::vector<std::string> vocab;  // must contain every special token once
    std::size_t d_model = 32;
    std::size_t n_heads = 2;
    std::size_t n_enc_layers = 1;
    std::size_t n_dec_layers = 1;
    std::size_t max_src_len = 64;
    std::size_t max_gen_len = 32;
    std::size_t infusion_dim = 64;

    std::size_t d_ff() const { return 2 * d_model; }
};

/// One named slice of the flat parameter vector, interpreted as a row-major
/// rows x cols matrix (rows == 1 for biases and layer-norm vectors).
struct ParamView {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
};

namespace toydetail {

// attention projections carry no biases: a key bias shifts every softmax
// row by a constant, leaving the loss invariant and the gradient zero,
// which breaks finite-difference checks on that direction
struct AttnOffsets {
    std::size_t wq, wk, wv, wo;
};
struct LnOffsets {
    std::size_t gain, bias;
};
struct FfnOffsets {
    std::size_t w1, b1, w2, b2;
};
struct EncOffsets {
    AttnOffsets attn;
    LnOffsets ln1;
    FfnOffsets ffn;
    LnOffsets ln2;
};
struct DecOffsets {
    AttnOffsets self_attn;
    LnOffsets ln1;
    AttnOffsets cross;
    LnOffsets ln2;
    FfnOffsets ffn;
    LnOffsets ln3;
};

}  // namespace toydetail

/// Maps every parameter tensor to its slice of theta. The named views tile
/// the flat vector exactly: contiguous, no gaps, no overlaps.
class ParamLayout {
public:
    explicit ParamLayout(const ToyModelConfig& config) {
        std::size_t v = config.vocab.size();
        std::size_t d = config.d_model;
        std::size_t f = config.d_ff();
        std::size_t inf = config.infusion_dim;

        add("embedding", v, d);
        embedding_ = views_.back().offset;

        auto add_attn = [&](const std::string& prefix) {
            toydetail::AttnOffsets o;
            o.wq = add(prefix + ".wq", d, d);
            o.wk = add(prefix + ".wk", d, d);
            o.wv = add(prefix + ".wv", d, d);
            o.wo = add(prefix + ".wo", d, d);
            return o;
        };
        auto add_ln = [&](const std::string& prefix) {
            toydetail::LnOffsets o;
            o.gain = add(prefix + ".gain", 1, d);
            o.bias = add(prefix + ".bias", 1, d);
            return o;
        };
        auto add_ffn = [&](const std::string& prefix) {
            toydetail::FfnOffsets o;
            o.w1 = add(prefix + ".w1", d, f);
            o.b1 = add(prefix + ".b1", 1, f);
            o.w2 = add(prefix + ".w2", f, d);
            o.b2 = add(prefix + ".b2", 1, d);
            return o;
        };

        for (std::size_t i = 0; i < config.n_enc_layers; ++i) {
            std::string p = "enc" + std::to_string(i);
            toydetail::EncOffsets e;
            e.attn = add_attn(p + ".attn");
            e.ln1 = add_ln(p + ".ln1");
            e.ffn = add_ffn(p + ".ffn");
            e.ln2 = add_ln(p + ".ln2");
            enc_.push_back(e);
        }
        for (std::size_t i = 0; i < config.n_dec_layers; ++i) {
            std::string p = "dec" + std::to_string(i);
            toydetail::DecOffsets dl;
            dl.self_attn = add_attn(p + ".self");
            dl.ln1 = add_ln(p + ".ln1");
            dl.cross = add_attn(p + ".cross");
            dl.ln2 = add_ln(p + ".ln2");
            dl.ffn = add_ffn(p + ".ffn");
            dl.ln3 = add_ln(p + ".ln3");
            dec_.push_back(dl);
        }
        out_w_ = add("output.w", d, v);
        out_b_ = add("output.b", 1, v);
        inf_w_ = add("infusion.w", d, inf);
        inf_b_ = add("infusion.b", 1, inf);
    }

    const std::vector<ParamView>& views() const { return views_; }
    std::size_t total() const { return total_; }

    std::size_t embedding() const { return embedding_; }
    const toydetail::EncOffsets& enc(std::size_t i) const { return enc_[i]; }
    const toydetail::DecOffsets& dec(std::size_t i) const { return dec_[i]; }
    std::size_t out_w() const { return out_w_; }
    std::size_t out_b() const { return out_b_; }
    std::size_t inf_w() const { return inf_w_; }
    std::size_t inf_b() const { return inf_b_; }

private:
    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols) {
        std::size_t offset = total_;
        views_.push_back({name, offset, rows, cols});
        total_ += rows * cols;
        return offset;
    }

    std::vector<ParamView> views_;
    std::size_t total_ = 0;
    std::size_t embedding_ = 0;
    std::vector<toydetail::EncOffsets> enc_;
    std::vector<toydetail::DecOffsets> dec_;
    std::size_t out_w_ = 0, out_b_ = 0, inf_w_ = 0, inf_b_ = 0;
};

struct ToyModelParams {
    std::vector<double> theta;
};

/// Token ids resolved against the config vocabulary.
class VocabIndex {
public:
    explicit VocabIndex(const ToyModelConfig& config) {
        if (config.d_model == 0 || config.n_heads == 0)
            throw data_error("model config: d_model and n_heads must be positive");
        if (config.d_model % config.n_heads != 0)
            throw data_error("model config: d_model must be divisible by n_heads");
        for (std::size_t i = 0; i < config.vocab.size(); ++i) {
            if (!ids_.emplace(config.vocab[i], i).second)
                throw data_error("model config: duplicate vocab token '" + config.vocab[i] + "'");
        }
        for (const char* sp : {kClsToken, kSepToken, kPadToken, kBosToken, kEosToken, kUnkToken}) {
            auto it = ids_.find(sp);
            if (it == ids_.end())
                throw data_error(std::string("model config: vocab missing special token ") + sp);
        }
        unk_ = ids_.at(kUnkToken);
        bos_ = ids_.at(kBosToken);
        eos_ = ids_.at(kEosToken);
        pad_ = ids_.at(kPadToken);
        cls_ = ids_.at(kClsToken);
    }

    std::size_t id_or_unk(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? unk_ : it->second;
    }

    std::size_t unk() const { return unk_; }
    std::size_t bos() const { return bos_; }
    std::size_t eos() const { return eos_; }
    std::size_t pad() const { return pad_; }
    std::size_t cls() const { return cls_; }

private:
    std::map<std::string, std::size_t> ids_;
    std::size_t unk_ = 0, bos_ = 0, eos_ = 0, pad_ = 0, cls_ = 0;
};

// ---------------------------------------------------------------------------
// Training data and configuration
// ---------------------------------------------------------------------------

enum class InfusionLoss { mse, cl };

struct TrainConfig {
    double alpha = 0.5;
    InfusionLoss loss_kind = InfusionLoss::mse;
    double learning_rate = 1e-3;  // full-scale runs use 1e-5; the toy model
                                  // is ~4 orders of magnitude smaller
    std::size_t batch_size = 8;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    std::size_t negatives_per_example = 4;  // CL only
};

struct TrainingExample {
    FormattedSession source;
    std::vector<std::string> target;                      // q* or r* tokens
    std::vector<double> positive_embedding;               // h_{p+}
    std::vector<std::vector<double>> negative_embeddings; // CL negatives
};

// ---------------------------------------------------------------------------
// Dense matrix scratch type and primitive forward/backward blocks
// ---------------------------------------------------------------------------

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

namespace toydetail {

constexpr double kLnEps = 1e-5;
constexpr double kMaskScore = -1e30;

// Y(T x n) = X(T x m) W(m x n) + b; b may be null for bias-free projections
inline void linear(const Mat& x, const double* w, const double* b, Mat& y, std::size_t m,
                   std::size_t n) {
    y = Mat(x.rows, n);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const double* xr = x.row(t);
        double* yr = y.row(t);
        for (std::size_t j = 0; j < n; ++j) yr[j] = b ? b[j] : 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wr = w + i * n;
            for (std::size_t j = 0; j < n; ++j) yr[j] += xi * wr[j];
        }
    }
}

// accumulates dX += dY W^T, dW += X^T dY, db += colsum(dY); db may be null
inline void linear_backward(const Mat& x, const double* w, const Mat& dy, Mat& dx, double* dw,
                            double* db, std::size_t m, std::size_t n) {
    for (std::size_t t = 0; t < x.rows; ++t) {
        const double* xr = x.row(t);
        const double* dyr = dy.row(t);
        double* dxr = dx.row(t);
        if (db)
            for (std::size_t j = 0; j < n; ++j) db[j] += dyr[j];
        for (std::size_t i = 0; i < m; ++i) {
            const double* wr = w + i * n;
            double acc = 0.0;
            double xi = xr[i];
            double* dwr = dw + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                acc += dyr[j] * wr[j];
                dwr[j] += xi * dyr[j];
            }
            dxr[i] += acc;
        }
    }
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476)); }

inline double gelu_grad(double x) {
    constexpr double inv_sqrt2 = 0.7071067811865476;
    constexpr double inv_sqrt2pi = 0.3989422804014327;
    return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
}

struct LnCache {
    Mat xhat;
    std::vector<double> inv_std;
};

inline void layer_norm(const Mat& x, const double* gain, const double* bias, Mat& y,
                       LnCache& cache) {
    std::size_t d = x.cols;
    y = Mat(x.rows, d);
    cache.xhat = Mat(x.rows, d);
    cache.inv_std.assign(x.rows, 0.0);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const double* xr = x.row(t);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        double inv_std = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std[t] = inv_std;
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (xr[j] - mean) * inv_std;
            cache.xhat.at(t, j) = xh;
            y.at(t, j) = gain[j] * xh + bias[j];
        }
    }
}

inline void layer_norm_backward(const Mat& dy, const LnCache& cache, const double* gain, Mat& dx,
                                double* dgain, double* dbias) {
    std::size_t d = dy.cols;
    for (std::size_t t = 0; t < dy.rows; ++t) {
        const double* dyr = dy.row(t);
        const double* xh = cache.xhat.row(t);
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
            double dxh = dyr[j] * gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[j];
        }
        double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            double dxh = dyr[j] * gain[j];
            dx.at(t, j) += cache.inv_std[t] *
                           (dxh - inv_d * sum_dxhat - xh[j] * inv_d * sum_dxhat_xhat);
        }
    }
}

struct AttnCache {
    Mat q, k, v;             // post-linear projections
    std::vector<Mat> probs;  // per head, Tq x Tk
    Mat concat;              // Tq x d
};

/// Multi-head scaled dot-product attention. With causal set, position i
/// attends to keys 0..i (valid for self-attention where Tq == Tk).
inline void attention(const Mat& xq, const Mat& xkv, const double* theta, const AttnOffsets& w,
                      std::size_t d, std::size_t n_heads, bool causal, AttnCache& cache,
                      Mat& out) {
    std::size_t dk = d / n_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    linear(xq, theta + w.wq, nullptr, cache.q, d, d);
    linear(xkv, theta + w.wk, nullptr, cache.k, d, d);
    linear(xkv, theta + w.wv, nullptr, cache.v, d, d);

    std::size_t tq = xq.rows, tk = xkv.rows;
    cache.concat = Mat(tq, d);
    cache.probs.assign(n_heads, Mat());
    for (std::size_t h = 0; h < n_heads; ++h) {
        std::size_t base = h * dk;
        Mat& p = cache.probs[h];
        p = Mat(tq, tk);
        for (std::size_t i = 0; i < tq; ++i) {
            const double* qi = cache.q.row(i) + base;
            double max_score = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < tk; ++j) {
                double s;
                if (causal && j > i) {
                    s = kMaskScore;
                } else {
                    s = 0.0;
                    const double* kj = cache.k.row(j) + base;
                    for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
                    s *= scale;
                }
                p.at(i, j) = s;
                max_score = std::max(max_score, s);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < tk; ++j) {
                double e = std::exp(p.at(i, j) - max_score);
                p.at(i, j) = e;
                z += e;
            }
            for (std::size_t j = 0; j < tk; ++j) p.at(i, j) /= z;

            double* ctx = cache.concat.row(i) + base;
            for (std::size_t j = 0; j < tk; ++j) {
                double pj = p.at(i, j);
                if (pj == 0.0) continue;
                const double* vj = cache.v.row(j) + base;
                for (std::size_t c = 0; c < dk; ++c) ctx[c] += pj * vj[c];
            }
        }
    }
    linear(cache.concat, theta + w.wo, nullptr, out, d, d);
}

/// Accumulates gradients for one attention block. dxq and dxkv must be
/// pre-sized; for self-attention pass the same matrix for both.
inline void attention_backward(const Mat& xq, const Mat& xkv, const double* theta,
                               const AttnOffsets& w, std::size_t d, std::size_t n_heads,
                               const AttnCache& cache, const Mat& dout, Mat& dxq, Mat& dxkv,
                               double* dtheta) {
    std::size_t dk = d / n_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    std::size_t tq = xq.rows, tk = xkv.rows;

    Mat dconcat(tq, d);
    linear_backward(cache.concat, theta + w.wo, dout, dconcat, dtheta + w.wo, nullptr, d, d);

    Mat dq(tq, d), dkm(tk, d), dv(tk, d);
    for (std::size_t h = 0; h < n_heads; ++h) {
        std::size_t base = h * dk;
        const Mat& p = cache.probs[h];
        for (std::size_t i = 0; i < tq; ++i) {
            const double* dctx = dconcat.row(i) + base;

            // dP and dV
            std::vector<double> dp(tk, 0.0);
            for (std::size_t j = 0; j < tk; ++j) {
                double pj = p.at(i, j);
                const double* vj = cache.v.row(j) + base;
                double acc = 0.0;
                for (std::size_t c = 0; c < dk; ++c) acc += dctx[c] * vj[c];
                dp[j] = acc;
                if (pj != 0.0) {
                    double* dvj = dv.row(j) + base;
                    for (std::size_t c = 0; c < dk; ++c) dvj[c] += pj * dctx[c];
                }
            }

            // softmax backward: ds_j = p_j (dp_j - sum_k dp_k p_k)
            double dot = 0.0;
            for (std::size_t j = 0; j < tk; ++j) dot += dp[j] * p.at(i, j);
            const double* qi = cache.q.row(i) + base;
            double* dqi = dq.row(i) + base;
            for (std::size_t j = 0; j < tk; ++j) {
                double ds = p.at(i, j) * (dp[j] - dot);
                if (ds == 0.0) continue;
                double g = ds * scale;
                const double* kj = cache.k.row(j) + base;
                double* dkj = dkm.row(j) + base;
                for (std::size_t c = 0; c < dk; ++c) {
                    dqi[c] += g * kj[c];
                    dkj[c] += g * qi[c];
                }
            }
        }
    }
    linear_backward(xq, theta + w.wq, dq, dxq, dtheta + w.wq, nullptr, d, d);
    linear_backward(xkv, theta + w.wk, dkm, dxkv, dtheta + w.wk, nullptr, d, d);
    linear_backward(xkv, theta + w.wv, dv, dxkv, dtheta + w.wv, nullptr, d, d);
}

struct FfnCache {
    Mat pre;  // T x d_ff, pre-activation
    Mat act;  // T x d_ff
};

inline void ffn(const Mat& x, const double* theta, const FfnOffsets& w, std::size_t d,
                std::size_t f, FfnCache& cache, Mat& out) {
    linear(x, theta + w.w1, theta + w.b1, cache.pre, d, f);
    cache.act = Mat(cache.pre.rows, f);
    for (std::size_t i = 0; i < cache.pre.a.size(); ++i) cache.act.a[i] = gelu(cache.pre.a[i]);
    linear(cache.act, theta + w.w2, theta + w.b2, out, f, d);
}

inline void ffn_backward(const Mat& x, const double* theta, const FfnOffsets& w, std::size_t d,
                         std::size_t f, const FfnCache& cache, const Mat& dout, Mat& dx,
                         double* dtheta) {
    Mat dact(cache.act.rows, f);
    linear_backward(cache.act, theta + w.w2, dout, dact, dtheta + w.w2, dtheta + w.b2, f, d);
    Mat dpre(cache.pre.rows, f);
    for (std::size_t i = 0; i < dpre.a.size(); ++i)
        dpre.a[i] = dact.a[i] * gelu_grad(cache.pre.a[i]);
    linear_backward(x, theta + w.w1, dpre, dx, dtheta + w.w1, dtheta + w.b1, d, f);
}

inline double positional_encoding(std::size_t pos, std::size_t j, std::size_t d) {
    double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(d);
    double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
    return (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
}

/// Token embeddings plus sinusoidal positions.
inline Mat embed(const std::vector<std::size_t>& ids, const double* theta, std::size_t emb_offset,
                 std::size_t d) {
    Mat x(ids.size(), d);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const double* e = theta + emb_offset + ids[t] * d;
        double* xr = x.row(t);
        for (std::size_t j = 0; j < d; ++j) xr[j] = e[j] + positional_encoding(t, j, d);
    }
    return x;
}

struct EncLayerCache {
    Mat x_in;
    AttnCache attn;
    Mat attn_out, r1;
    LnCache ln1;
    Mat x1;
    FfnCache ffn;
    Mat ffn_out, r2;
    LnCache ln2;
    Mat x2;
};

struct DecLayerCache {
    Mat y_in;
    AttnCache self_attn;
    Mat self_out, r1;
    LnCache ln1;
    Mat y1;
    AttnCache cross;
    Mat cross_out, r2;
    LnCache ln2;
    Mat y2;
    FfnCache ffn;
    Mat ffn_out, r3;
    LnCache ln3;
    Mat y3;
};

struct EncoderCache {
    std::vector<std::size_t> src_ids;
    Mat x0;
    std::vector<EncLayerCache> layers;
    const Mat& output() const { return layers.empty() ? x0 : layers.back().x2; }
};

inline void encoder_forward(const std::vector<std::size_t>& src_ids, const double* theta,
                            const ParamLayout& layout, const ToyModelConfig& config,
                            EncoderCache& cache) {
    std::size_t d = config.d_model;
    cache.src_ids = src_ids;
    cache.x0 = embed(src_ids, theta, layout.embedding(), d);
    const Mat* x = &cache.x0;
    cache.layers.assign(config.n_enc_layers, EncLayerCache());
    for (std::size_t l = 0; l < config.n_enc_layers; ++l) {
        EncLayerCache& lc = cache.layers[l];
        const auto& off = layout.enc(l);
        lc.x_in = *x;
        attention(lc.x_in, lc.x_in, theta, off.attn, d, config.n_heads, false, lc.attn,
                  lc.attn_out);
        lc.r1 = lc.x_in;
        for (std::size_t i = 0; i < lc.r1.a.size(); ++i) lc.r1.a[i] += lc.attn_out.a[i];
        layer_norm(lc.r1, theta + off.ln1.gain, theta + off.ln1.bias, lc.x1, lc.ln1);
        ffn(lc.x1, theta, off.ffn, d, config.d_ff(), lc.ffn, lc.ffn_out);
        lc.r2 = lc.x1;
        for (std::size_t i = 0; i < lc.r2.a.size(); ++i) lc.r2.a[i] += lc.ffn_out.a[i];
        layer_norm(lc.r2, theta + off.ln2.gain, theta + off.ln2.bias, lc.x2, lc.ln2);
        x = &lc.x2;
    }
}

/// Backward through the encoder stack into the embedding table.
inline void encoder_backward(const EncoderCache& cache, const double* theta,
                             const ParamLayout& layout, const ToyModelConfig& config,
                             const Mat& dout, double* dtheta) {
    std::size_t d = config.d_model;
    Mat dx = dout;
    for (std::size_t l = config.n_enc_layers; l-- > 0;) {
        const EncLayerCache& lc = cache.layers[l];
        const auto& off = layout.enc(l);

        Mat dr2(lc.r2.rows, d);
        layer_norm_backward(dx, lc.ln2, theta + off.ln2.gain, dr2, dtheta + off.ln2.gain,
                            dtheta + off.ln2.bias);
        Mat dx1 = dr2;  // residual branch
        ffn_backward(lc.x1, theta, off.ffn, d, config.d_ff(), lc.ffn, dr2, dx1, dtheta);

        Mat dr1(lc.r1.rows, d);
        layer_norm_backward(dx1, lc.ln1, theta + off.ln1.gain, dr1, dtheta + off.ln1.gain,
                            dtheta + off.ln1.bias);
        Mat dx_in = dr1;  // residual branch
        attention_backward(lc.x_in, lc.x_in, theta, off.attn, d, config.n_heads, lc.attn, dr1,
                           dx_in, dx_in, dtheta);
        dx = std::move(dx_in);
    }
    for (std::size_t t = 0; t < cache.src_ids.size(); ++t) {
        double* de = dtheta + layout.embedding() + cache.src_ids[t] * d;
        const double* dxr = dx.row(t);
        for (std::size_t j = 0; j < d; ++j) de[j] += dxr[j];
    }
}

struct DecoderCache {
    std::vector<std::size_t> in_ids;
    Mat y0;
    std::vector<DecLayerCache> layers;
    const Mat& output() const { return layers.empty() ? y0 : layers.back().y3; }
};

inline void decoder_forward(const std::vector<std::size_t>& in_ids, const Mat& enc_out,
                            const double* theta, const ParamLayout& layout,
                            const ToyModelConfig& config, DecoderCache& cache) {
    std::size_t d = config.d_model;
    cache.in_ids = in_ids;
    cache.y0 = embed(in_ids, theta, layout.embedding(), d);
    const Mat* y = &cache.y0;
    cache.layers.assign(config.n_dec_layers, DecLayerCache());
    for (std::size_t l = 0; l < config.n_dec_layers; ++l) {
        DecLayerCache& lc = cache.layers[l];
        const auto& off = layout.dec(l);
        lc.y_in = *y;
        attention(lc.y_in, lc.y_in, theta, off.self_attn, d, config.n_heads, true, lc.self_attn,
                  lc.self_out);
        lc.r1 = lc.y_in;
        for (std::size_t i = 0; i < lc.r1.a.size(); ++i) lc.r1.a[i] += lc.self_out.a[i];
        layer_norm(lc.r1, theta + off.ln1.gain, theta + off.ln1.bias, lc.y1, lc.ln1);

        attention(lc.y1, enc_out, theta, off.cross, d, config.n_heads, false, lc.cross,
                  lc.cross_out);
        lc.r2 = lc.y1;
        for (std::size_t i = 0; i < lc.r2.a.size(); ++i) lc.r2.a[i] += lc.cross_out.a[i];
        layer_norm(lc.r2, theta + off.ln2.gain, theta + off.ln2.bias, lc.y2, lc.ln2);

        ffn(lc.y2, theta, off.ffn, d, config.d_ff(), lc.ffn, lc.ffn_out);
        lc.r3 = lc.y2;
        for (std::size_t i = 0; i < lc.r3.a.size(); ++i) lc.r3.a[i] += lc.ffn_out.a[i];
        layer_norm(lc.r3, theta + off.ln3.gain, theta + off.ln3.bias, lc.y3, lc.ln3);
        y = &lc.y3;
    }
}

/// Backward through the decoder stack. Accumulates into the embedding table
/// and into denc_out (the gradient w.r.t. the encoder output).
inline void decoder_backward(const DecoderCache& cache, const Mat& enc_out, const double* theta,
                             const ParamLayout& layout, const ToyModelConfig& config,
                             const Mat& dout, Mat& denc_out, double* dtheta) {
    std::size_t d = config.d_model;
    Mat dy = dout;
    for (std::size_t l = config.n_dec_layers; l-- > 0;) {
        const DecLayerCache& lc = cache.layers[l];
        const auto& off = layout.dec(l);

        Mat dr3(lc.r3.rows, d);
        layer_norm_backward(dy, lc.ln3, theta + off.ln3.gain, dr3, dtheta + off.ln3.gain,
                            dtheta + off.ln3.bias);
        Mat dy2 = dr3;
        ffn_backward(lc.y2, theta, off.ffn, d, config.d_ff(), lc.ffn, dr3, dy2, dtheta);

        Mat dr2(lc.r2.rows, d);
        layer_norm_backward(dy2, lc.ln2, theta + off.ln2.gain, dr2, dtheta + off.ln2.gain,
                            dtheta + off.ln2.bias);
        Mat dy1 = dr2;
        attention_backward(lc.y1, enc_out, theta, off.cross, d, config.n_heads, lc.cross, dr2,
                           dy1, denc_out, dtheta);

        Mat dr1(lc.r1.rows, d);
        layer_norm_backward(dy1, lc.ln1, theta + off.ln1.gain, dr1, dtheta + off.ln1.gain,
                            dtheta + off.ln1.bias);
        Mat dy_in = dr1;
        attention_backward(lc.y_in, lc.y_in, theta, off.self_attn, d, config.n_heads,
                           lc.self_attn, dr1, dy_in, dy_in, dtheta);
        dy = std::move(dy_in);
    }
    for (std::size_t t = 0; t < cache.in_ids.size(); ++t) {
        double* de = dtheta + layout.embedding() + cache.in_ids[t] * d;
        const double* dyr = dy.row(t);
        for (std::size_t j = 0; j < d; ++j) de[j] += dyr[j];
    }
}

inline std::vector<std::size_t> source_ids(const VocabIndex& vocab, const ToyModelConfig& config,
                                           const std::vector<std::string>& source_tokens) {
    if (source_tokens.empty() || source_tokens.front() != kClsToken)
        throw data_error("encode: source must start with " + std::string(kClsToken));
    if (source_tokens.size() > config.max_src_len)
        throw data_error("encode: source length " + std::to_string(source_tokens.size()) +
                         " exceeds max_src_len " + std::to_string(config.max_src_len));
    std::vector<std::size_t> ids;
    ids.reserve(source_tokens.size());
    for (const auto& t : source_tokens) ids.push_back(vocab.id_or_unk(t));
    return ids;
}

/// h_S = enc_out[0] * W_inf + b_inf
inline std::vector<double> infusion_head(const Mat& enc_out, const double* theta,
                                         const ParamLayout& layout, std::size_t d,
                                         std::size_t inf) {
    std::vector<double> h(inf, 0.0);
    const double* x0 = enc_out.row(0);
    const double* w = theta + layout.inf_w();
    const double* b = theta + layout.inf_b();
    for (std::size_t j = 0; j < inf; ++j) h[j] = b[j];
    for (std::size_t i = 0; i < d; ++i) {
        double xi = x0[i];
        const double* wr = w + i * inf;
        for (std::size_t j = 0; j < inf; ++j) h[j] += xi * wr[j];
    }
    return h;
}

}  // namespace toydetail

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

struct EncodeResult {
    Mat encoder_states;       // src_len x d_model
    std::vector<double> h_s;  // infusion_dim
};

/// Runs the encoder and the infusion head. Unknown tokens map to [UNK];
/// over-length sources are rejected.
inline EncodeResult encode(const ToyModelParams& params, const ToyModelConfig& config,
                           const std::vector<std::string>& source_tokens) {
    VocabIndex vocab(config);
    ParamLayout layout(config);
    if (params.theta.size() != layout.total())
        throw data_error("encode: parameter vector does not match config layout");
    toydetail::EncoderCache cache;
    toydetail::encoder_forward(toydetail::source_ids(vocab, config, source_tokens),
                               params.theta.data(), layout, config, cache);
    EncodeResult result;
    result.encoder_states = cache.output();
    result.h_s = toydetail::infusion_head(cache.output(), params.theta.data(), layout,
                                          config.d_model, config.infusion_dim);
    return result;
}

/// Mean squared error between the sequence representation and the relevant
/// passage embedding.
inline double loss_mse(const std::vector<double>& h_s, const std::vector<double>& h_pos) {
    if (h_s.size() != h_pos.size())
        throw data_error("loss_mse: dimension mismatch (" + std::to_string(h_s.size()) + " vs " +
                         std::to_string(h_pos.size()) + ")");
    if (h_s.empty()) throw data_error("loss_mse: empty vectors");
    double sum = 0.0;
    for (std::size_t i = 0; i < h_s.size(); ++i) {
        double d = h_s[i] - h_pos[i];
        sum += d * d;
    }
    return sum / static_cast<double>(h_s.size());
}

/// Contrastive loss over one positive and >= 1 negatives, computed with
/// max-subtraction for stability.
inline double loss_cl(const std::vector<double>& h_s, const std::vector<double>& h_pos,
                      const std::vector<std::vector<double>>& negatives) {
    if (negatives.empty()) throw data_error("loss_cl: need at least one negative");
    if (h_s.size() != h_pos.size()) throw data_error("loss_cl: dimension mismatch");
    auto dot = [&](const std::vector<double>& v) {
        if (v.size() != h_s.size()) throw data_error("loss_cl: negative dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < h_s.size(); ++i) s += h_s[i] * v[i];
        return s;
    };
    double s_pos = dot(h_pos);
    double m = s_pos;
    std::vector<double> s_neg(negatives.size());
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        s_neg[i] = dot(negatives[i]);
        m = std::max(m, s_neg[i]);
    }
    double z = std::exp(s_pos - m);
    for (double s : s_neg) z += std::exp(s - m);
    return std::log(z) + m - s_pos;
}

struct LossBreakdown {
    double gen = 0.0;
    double ret = 0.0;
    double total = 0.0;
};

namespace toydetail {

/// Shared forward (and optional backward) pass for one training example.
/// The generation loss counts the [EOS] terminator as a timestep: a target
/// of n tokens is framed as [BOS] w1..wn -> w1..wn [EOS] and contributes
/// n + 1 NLL terms, summed (not averaged).
inline LossBreakdown example_pass(const ToyModelParams& params, const ToyModelConfig& config,
                                  const TrainingExample& example, const TrainConfig& train,
                                  double* dtheta) {
    VocabIndex vocab(config);
    ParamLayout layout(config);
    if (params.theta.size() != layout.total())
        throw data_error("model: parameter vector does not match config layout");
    if (example.target.empty()) throw data_error("loss_gen: empty target");
    if (example.target.size() > config.max_gen_len)
        throw data_error("loss_gen: target length " + std::to_string(example.target.size()) +
                         " exceeds max_gen_len " + std::to_string(config.max_gen_len));
    const double* theta = params.theta.data();
    std::size_t d = config.d_model;
    std::size_t v = config.vocab.size();

    EncoderCache enc;
    encoder_forward(source_ids(vocab, config, example.source.tokens), theta, layout, config, enc);
    const Mat& enc_out = enc.output();

    // inputs [BOS] w1..wn, labels w1..wn [EOS]
    std::vector<std::size_t> dec_in{vocab.bos()};
    std::vector<std::size_t> labels;
    for (const auto& t : example.target) {
        std::size_t id = vocab.id_or_unk(t);
        dec_in.push_back(id);
        labels.push_back(id);
    }
    labels.push_back(vocab.eos());

    DecoderCache dec;
    decoder_forward(dec_in, enc_out, theta, layout, config, dec);
    const Mat& dec_out = dec.output();

    Mat logits;
    linear(dec_out, theta + layout.out_w(), theta + layout.out_b(), logits, d, v);

    // teacher-forced NLL, summed over timesteps
    std::size_t steps = labels.size();
    Mat probs(steps, v);
    double gen = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const double* z = logits.row(t);
        double m = z[0];
        for (std::size_t j = 1; j < v; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < v; ++j) sum += std::exp(z[j] - m);
        double lse = m + std::log(sum);
        gen += lse - z[labels[t]];
        for (std::size_t j = 0; j < v; ++j) probs.at(t, j) = std::exp(z[j] - lse);
    }

    // retrieval loss on h_S
    std::vector<double> h_s =
        infusion_head(enc_out, theta, layout, d, config.infusion_dim);
    double ret = 0.0;
    if (train.loss_kind == InfusionLoss::mse) {
        ret = loss_mse(h_s, example.positive_embedding);
    } else {
        ret = loss_cl(h_s, example.positive_embedding, example.negative_embeddings);
    }

    LossBreakdown breakdown;
    breakdown.gen = gen;
    breakdown.ret = ret;
    breakdown.total = gen + train.alpha * ret;

    if (dtheta == nullptr) return breakdown;

    // ---- backward ----
    Mat dlogits = probs;
    for (std::size_t t = 0; t < steps; ++t) dlogits.at(t, labels[t]) -= 1.0;

    Mat ddec_out(dec_out.rows, d);
    linear_backward(dec_out, theta + layout.out_w(), dlogits, ddec_out, dtheta + layout.out_w(),
                    dtheta + layout.out_b(), d, v);

    Mat denc_out(enc_out.rows, d);
    decoder_backward(dec, enc_out, theta, layout, config, ddec_out, denc_out, dtheta);

    if (train.alpha != 0.0) {
        std::size_t inf = config.infusion_dim;
        std::vector<double> dh(inf, 0.0);
        if (train.loss_kind == InfusionLoss::mse) {
            double scale = train.alpha * 2.0 / static_cast<double>(inf);
            for (std::size_t j = 0; j < inf; ++j)
                dh[j] = scale * (h_s[j] - example.positive_embedding[j]);
        } else {
            // softmax over {pos, negatives}; dL/dh = sum_i p_i h_i - h_pos
            auto dot = [&](const std::vector<double>& w) {
                double s = 0.0;
                for (std::size_t i = 0; i < h_s.size(); ++i) s += h_s[i] * w[i];
                return s;
            };
            double s_pos = dot(example.positive_embedding);
            double m = s_pos;
            std::vector<double> s_neg(example.negative_embeddings.size());
            for (std::size_t i = 0; i < s_neg.size(); ++i) {
                s_neg[i] = dot(example.negative_embeddings[i]);
                m = std::max(m, s_neg[i]);
            }
            double z = std::exp(s_pos - m);
            for (double s : s_neg) z += std::exp(s - m);
            double p_pos = std::exp(s_pos - m) / z;
            for (std::size_t j = 0; j < inf; ++j)
                dh[j] = train.alpha * (p_pos - 1.0) * example.positive_embedding[j];
            for (std::size_t i = 0; i < s_neg.size(); ++i) {
                double p = std::exp(s_neg[i] - m) / z;
                for (std::size_t j = 0; j < inf; ++j)
                    dh[j] += train.alpha * p * example.negative_embeddings[i][j];
            }
        }
        // back through the infusion head into enc_out row 0
        const double* x0 = enc_out.row(0);
        const double* w = theta + layout.inf_w();
        double* dw = dtheta + layout.inf_w();
        double* db = dtheta + layout.inf_b();
        double* denc0 = denc_out.row(0);
        for (std::size_t j = 0; j < inf; ++j) db[j] += dh[j];
        for (std::size_t i = 0; i < d; ++i) {
            const double* wr = w + i * inf;
            double* dwr = dw + i * inf;
            double acc = 0.0;
            for (std::size_t j = 0; j < inf; ++j) {
                acc += dh[j] * wr[j];
                dwr[j] += x0[i] * dh[j];
            }
            denc0[i] += acc;
        }
    }

    encoder_backward(enc, theta, layout, config, denc_out, dtheta);
    return breakdown;
}

}  // namespace toydetail

/// Teacher-forced generation loss for one (source, target) pair.
inline double loss_gen(const ToyModelParams& params, const ToyModelConfig& config,
                       const std::vector<std::string>& source_tokens,
                       const std::vector<std::string>& target_tokens) {
    TrainingExample example;
    example.source.tokens = source_tokens;
    example.target = target_tokens;
    example.positive_embedding.assign(config.infusion_dim, 0.0);
    TrainConfig tc;
    tc.alpha = 0.0;
    tc.loss_kind = InfusionLoss::mse;
    return toydetail::example_pass(params, config, example, tc, nullptr).gen;
}

/// Combined objective: gen + alpha * ret, with the breakdown. The total is
/// always computed as that exact expression, so total - gen == alpha * ret
/// up to one rounding of the final addition.
inline LossBreakdown combined_loss(const ToyModelParams& params, const ToyModelConfig& config,
                                   const TrainingExample& example, const TrainConfig& train) {
    if (train.alpha < 0.0) throw data_error("combined_loss: alpha must be >= 0");
    return toydetail::example_pass(params, config, example, train, nullptr);
}

/// combined_loss plus analytic gradient accumulation into grad (sized to the
/// parameter count).
inline LossBreakdown combined_loss_grad(const ToyModelParams& params,
                                        const ToyModelConfig& config,
                                        const TrainingExample& example, const TrainConfig& train,
                                        std::vector<double>& grad) {
    if (train.alpha < 0.0) throw data_error("combined_loss: alpha must be >= 0");
    if (grad.size() != params.theta.size())
        throw data_error("combined_loss_grad: gradient buffer size mismatch");
    return toydetail::example_pass(params, config, example, train, grad.data());
}

// ---------------------------------------------------------------------------
// Initialization, training, decoding
// ---------------------------------------------------------------------------

/// Seeded deterministic initialization: Xavier-uniform weight matrices,
/// zero biases, unit layer-norm gains. The infusion projection starts as
/// the identity when d_model == infusion_dim.
inline ToyModelParams init_params(const ToyModelConfig& config, std::uint64_t seed) {
    VocabIndex vocab(config);  // validates config
    ParamLayout layout(config);
    ToyModelParams params;
    params.theta.assign(layout.total(), 0.0);
    SplitRng rng(seed);
    for (const ParamView& view : layout.views()) {
        double* p = params.theta.data() + view.offset;
        if (view.rows == 1) {
            // vector parameters: layer-norm gains start at 1, biases at 0
            if (view.name.ends_with(".gain"))
                for (std::size_t i = 0; i < view.size(); ++i) p[i] = 1.0;
        } else if (view.name == "infusion.w" && view.rows == view.cols) {
            for (std::size_t i = 0; i < view.rows; ++i) p[i * view.cols + i] = 1.0;
        } else if (view.name == "embedding") {
            for (std::size_t i = 0; i < view.size(); ++i) p[i] = rng.next_double(-0.1, 0.1);
        } else {
            double limit = std::sqrt(6.0 / static_cast<double>(view.rows + view.cols));
            for (std::size_t i = 0; i < view.size(); ++i)
                p[i] = rng.next_double(-limit, limit);
        }
    }
    return params;
}

struct StepLog {
    std::size_t step = 0;  // 1-based
    double gen = 0.0;
    double ret = 0.0;
    double total = 0.0;
};

struct TrainResult {
    ToyModelParams params;
    std::vector<StepLog> log;
};

/// Adam training loop. Batch order comes from a seeded shuffle redrawn at
/// each epoch boundary; gradients are accumulated in example-index order, so
/// the whole run is a pure function of (initial params, examples, config).
inline TrainResult train(const ToyModelParams& initial,
                         const std::vector<TrainingExample>& examples,
                         const ToyModelConfig& config, const TrainConfig& train_config) {
    if (examples.empty()) throw data_error("train: no examples");
    if (train_config.batch_size < 1) throw data_error("train: batch_size must be >= 1");

    TrainResult result;
    result.params = initial;
    std::vector<double>& theta = result.params.theta;

    std::size_t n = examples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SplitRng rng(train_config.seed);
    std::size_t pos = n;  // force shuffle on first step

    std::vector<double> grad(theta.size(), 0.0);
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    for (std::size_t step = 1; step <= train_config.steps; ++step) {
        if (pos >= n) {
            rng.shuffle(order);
            pos = 0;
        }
        std::size_t batch_end = std::min(pos + train_config.batch_size, n);
        std::size_t batch = batch_end - pos;

        std::fill(grad.begin(), grad.end(), 0.0);
        double gen_sum = 0.0, ret_sum = 0.0;
        for (std::size_t i = pos; i < batch_end; ++i) {
            LossBreakdown b = combined_loss_grad(result.params, config, examples[order[i]],
                                                 train_config, grad);
            gen_sum += b.gen;
            ret_sum += b.ret;
        }
        pos = batch_end;

        double inv_batch = 1.0 / static_cast<double>(batch);
        double gen_mean = gen_sum * inv_batch;
        double ret_mean = ret_sum * inv_batch;
        double total_mean = gen_mean + train_config.alpha * ret_mean;
        if (!std::isfinite(total_mean))
            throw numeric_error("train: non-finite loss at step " + std::to_string(step));

        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double g = grad[i] * inv_batch;
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            theta[i] -= train_config.learning_rate * (m[i] / bc1) /
                        (std::sqrt(v[i] / bc2) + adam_eps);
        }
        result.log.push_back({step, gen_mean, ret_mean, total_mean});
    }
    return result;
}

/// Greedy argmax decoding from [BOS]; stops at [EOS] or max_gen_len emitted
/// tokens. Ties resolve to the lowest token id. [EOS]/[BOS]/[PAD] are
/// excluded from the returned text tokens.
inline std::vector<std::string> generate(const ToyModelParams& params,
                                         const ToyModelConfig& config,
                                         const std::vector<std::string>& source_tokens) {
    VocabIndex vocab(config);
    ParamLayout layout(config);
    if (params.theta.size() != layout.total())
        throw data_error("generate: parameter vector does not match config layout");
    const double* theta = params.theta.data();
    std::size_t d = config.d_model;
    std::size_t v = config.vocab.size();

    toydetail::EncoderCache enc;
    toydetail::encoder_forward(toydetail::source_ids(vocab, config, source_tokens), theta, layout,
                               config, enc);
    const Mat& enc_out = enc.output();

    std::vector<std::size_t> out_ids;
    std::vector<std::size_t> dec_in{vocab.bos()};
    while (out_ids.size() < config.max_gen_len) {
        toydetail::DecoderCache dec;
        toydetail::decoder_forward(dec_in, enc_out, theta, layout, config, dec);
        Mat logits;
        toydetail::linear(dec.output(), theta + layout.out_w(), theta + layout.out_b(), logits, d,
                          v);
        const double* z = logits.row(logits.rows - 1);
        std::size_t best = 0;
        for (std::size_t j = 1; j < v; ++j)
            if (z[j] > z[best]) best = j;
        if (best == vocab.eos()) break;
        out_ids.push_back(best);
        dec_in.push_back(best);
    }

    std::vector<std::string> out;
    for (std::size_t id : out_ids) {
        if (id == vocab.eos() || id == vocab.bos() || id == vocab.pad()) continue;
        out.push_back(config.vocab[id]);
    }
    return out;
}

/// Central-difference validation of the analytic gradient of combined_loss.
/// Returns the max relative error over a seeded random subset of coordinates
/// (all coordinates when the model is smaller than the sample size).
inline double grad_check(const ToyModelParams& params, const ToyModelConfig& config,
                         const TrainingExample& example, const TrainConfig& train_config,
                         double epsilon, std::size_t sample_coords = 200,
                         std::uint64_t seed = 17) {
    std::vector<double> analytic(params.theta.size(), 0.0);
    combined_loss_grad(params, config, example, train_config, analytic);

    std::vector<std::size_t> coords(params.theta.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > sample_coords) {
        SplitRng rng(seed);
        rng.shuffle(coords);
        coords.resize(sample_coords);
    }

    ToyModelParams probe = params;
    double max_rel = 0.0;
    for (std::size_t c : coords) {
        double saved = probe.theta[c];
        probe.theta[c] = saved + epsilon;
        double up = combined_loss(probe, config, example, train_config).total;
        probe.theta[c] = saved - epsilon;
        double down = combined_loss(probe, config, example, train_config).total;
        probe.theta[c] = saved;
        double fd = (up - down) / (2.0 * epsilon);
        double rel = std::fabs(fd - analytic[c]) /
                     std::max(1e-8, std::fabs(fd) + std::fabs(analytic[c]));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoint and loss-log serialization
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[9] = "CGQRTM01";

inline std::string write_checkpoint(const ToyModelConfig& config, const ToyModelParams& params) {
    ParamLayout layout(config);
    if (params.theta.size() != layout.total())
        throw data_error("checkpoint: parameter vector does not match config layout");
    std::string out;
    out.append(kCheckpointMagic, 8);
    io::put_u64(out, config.vocab.size());
    for (const auto& tok : config.vocab) {
        io::put_u32(out, static_cast<std::uint32_t>(tok.size()));
        out += tok;
    }
    io::put_u64(out, config.d_model);
    io::put_u64(out, config.n_heads);
    io::put_u64(out, config.n_enc_layers);
    io::put_u64(out, config.n_dec_layers);
    io::put_u64(out, config.max_src_len);
    io::put_u64(out, config.max_gen_len);
    io::put_u64(out, config.infusion_dim);
    io::put_u64(out, params.theta.size());
    for (double x : params.theta) {
        if (!std::isfinite(x)) throw data_error("checkpoint: non-finite parameter");
        io::put_f64(out, x);
    }
    return out;
}

inline std::pair<ToyModelConfig, ToyModelParams> read_checkpoint(std::string_view bytes) {
    io::Reader r(bytes, "checkpoint");
    if (r.get_bytes(8) != std::string(kCheckpointMagic, 8))
        throw data_error("checkpoint: magic mismatch");
    ToyModelConfig config;
    std::uint64_t vocab_size = r.get_u64();
    config.vocab.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        std::uint32_t len = r.get_u32();
        config.vocab.push_back(r.get_bytes(len));
    }
    config.d_model = r.get_u64();
    config.n_heads = r.get_u64();
    config.n_enc_layers = r.get_u64();
    config.n_dec_layers = r.get_u64();
    config.max_src_len = r.get_u64();
    config.max_gen_len = r.get_u64();
    config.infusion_dim = r.get_u64();
    std::uint64_t theta_size = r.get_u64();
    ParamLayout layout(config);
    if (theta_size != layout.total())
        throw data_error("checkpoint: parameter count does not match config");
    ToyModelParams params;
    params.theta.reserve(theta_size);
    for (std::uint64_t i = 0; i < theta_size; ++i) params.theta.push_back(r.get_f64());
    if (!r.exhausted()) throw data_error("checkpoint: trailing bytes");
    return {std::move(config), std::move(params)};
}

inline std::string write_loss_log(const std::vector<StepLog>& log) {
    std::string out;
    for (const auto& e : log) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g\n", e.step, e.gen, e.ret, e.total);
        out += buf;
    }
    return out;
}

}  // namespace convgqr
