#include "pairval/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"

namespace pairval::features {

using nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void VaeConfig::validate() const {
    require(input_side >= 2 && hidden >= 1 && latent >= 1, ErrorCode::invalid_argument, "bad VAE layer sizes");
    require(learning_rate > 0.0 && epochs >= 1 && batch_size >= 1, ErrorCode::invalid_argument,
            "bad VAE training settings");
    require(kl_weight >= 0.0, ErrorCode::invalid_argument, "kl_weight must be >= 0");
}

json VaeConfig::to_json() const {
    return {{"input_side", input_side}, {"hidden", hidden},       {"latent", latent},
            {"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
            {"kl_weight", kl_weight},   {"seed", seed},           {"min_images", min_images}};
}

VaeConfig VaeConfig::from_json(const json& j) {
    VaeConfig c;
    c.input_side = j.value("input_side", c.input_side);
    c.hidden = j.value("hidden", c.hidden);
    c.latent = j.value("latent", c.latent);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.seed = j.value("seed", c.seed);
    c.min_images = j.value("min_images", c.min_images);
    c.validate();
    return c;
}

VectorXd vae_input(const Image& img, int side) {
    const Image gray = to_grayscale(img);
    VectorXd out(static_cast<Eigen::Index>(side) * side);
    const double sy = static_cast<double>(gray.height) / side;
    const double sx = static_cast<double>(gray.width) / side;
    for (int r = 0; r < side; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, gray.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, gray.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < side; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, gray.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, gray.width - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * gray.at(y0, x0) + wx * gray.at(y0, x1)) +
                             wy * ((1 - wx) * gray.at(y1, x0) + wx * gray.at(y1, x1));
            out(static_cast<Eigen::Index>(r) * side + c) = v / 255.0;
        }
    }
    return out;
}

namespace {

MatrixXd xavier(int rows, int cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    }
    return m;
}

MatrixXd sigmoid(const MatrixXd& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

json matrix_to_json(const MatrixXd& m) {
    std::vector<double> v(m.data(), m.data() + m.size());
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
}

MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto v = j.at("data").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(v.size()) == rows * cols, ErrorCode::parse, "VAE weight block size mismatch");
    return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

constexpr const char* kBlockNames[] = {"enc_w", "enc_b", "mu_w",  "mu_b",  "logvar_w",
                                       "logvar_b", "dec_w", "dec_b", "out_w", "out_b"};

}  // namespace

VaeModel::VaeModel(const VaeConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    const int d = cfg_.input_dim();
    enc_w_ = xavier(cfg_.hidden, d, rng);
    enc_b_ = MatrixXd::Zero(cfg_.hidden, 1);
    mu_w_ = xavier(cfg_.latent, cfg_.hidden, rng);
    mu_b_ = MatrixXd::Zero(cfg_.latent, 1);
    logvar_w_ = xavier(cfg_.latent, cfg_.hidden, rng);
    logvar_b_ = MatrixXd::Zero(cfg_.latent, 1);
    dec_w_ = xavier(cfg_.hidden, cfg_.latent, rng);
    dec_b_ = MatrixXd::Zero(cfg_.hidden, 1);
    out_w_ = xavier(d, cfg_.hidden, rng);
    out_b_ = MatrixXd::Zero(d, 1);
}

std::vector<MatrixXd*> VaeModel::parameters() {
    return {&enc_w_, &enc_b_, &mu_w_, &mu_b_, &logvar_w_, &logvar_b_, &dec_w_, &dec_b_, &out_w_, &out_b_};
}

std::vector<const MatrixXd*> VaeModel::parameters() const {
    return {&enc_w_, &enc_b_, &mu_w_, &mu_b_, &logvar_w_, &logvar_b_, &dec_w_, &dec_b_, &out_w_, &out_b_};
}

double VaeModel::loss(const MatrixXd& x, const MatrixXd& noise, VaeGradients* grad) const {
    const Eigen::Index batch = x.cols();
    const double d = static_cast<double>(x.rows());
    const double w = cfg_.kl_weight;

    const MatrixXd h1 = ((enc_w_ * x).colwise() + enc_b_.col(0)).array().tanh().matrix();
    const MatrixXd mu = (mu_w_ * h1).colwise() + mu_b_.col(0);
    const MatrixXd logvar = (logvar_w_ * h1).colwise() + logvar_b_.col(0);
    const MatrixXd std_dev = (0.5 * logvar.array()).exp().matrix();
    const MatrixXd z = mu + std_dev.cwiseProduct(noise);
    const MatrixXd h2 = ((dec_w_ * z).colwise() + dec_b_.col(0)).array().tanh().matrix();
    const MatrixXd xhat = sigmoid((out_w_ * h2).colwise() + out_b_.col(0));

    const MatrixXd diff = xhat - x;
    const double recon = diff.squaredNorm() / d;
    const double kl = -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
    const double total = (recon + w * kl) / static_cast<double>(batch);
    if (grad == nullptr) return total;

    const double scale = 1.0 / static_cast<double>(batch);
    const MatrixXd d_out = ((2.0 / d) * scale * diff).cwiseProduct(xhat.cwiseProduct((1.0 - xhat.array()).matrix()));
    const MatrixXd d_h2 = out_w_.transpose() * d_out;
    const MatrixXd d_dec = d_h2.cwiseProduct((1.0 - h2.array().square()).matrix());
    const MatrixXd d_z = dec_w_.transpose() * d_dec;
    const MatrixXd d_mu = d_z + (w * scale) * mu;
    const MatrixXd d_logvar = (d_z.cwiseProduct(noise).cwiseProduct(std_dev) * 0.5) +
                              ((w * scale * 0.5) * (logvar.array().exp() - 1.0)).matrix();
    const MatrixXd d_h1 = mu_w_.transpose() * d_mu + logvar_w_.transpose() * d_logvar;
    const MatrixXd d_enc = d_h1.cwiseProduct((1.0 - h1.array().square()).matrix());

    grad->assign(10, MatrixXd());
    auto& g = *grad;
    g[0] = d_enc * x.transpose();
    g[1] = d_enc.rowwise().sum();
    g[2] = d_mu * h1.transpose();
    g[3] = d_mu.rowwise().sum();
    g[4] = d_logvar * h1.transpose();
    g[5] = d_logvar.rowwise().sum();
    g[6] = d_dec * z.transpose();
    g[7] = d_dec.rowwise().sum();
    g[8] = d_out * h2.transpose();
    g[9] = d_out.rowwise().sum();
    return total;
}

double VaeModel::score(const VectorXd& x) const {
    require(x.size() == cfg_.input_dim(), ErrorCode::dimension_mismatch, "VAE input has the wrong length");
    const VectorXd h1 = (enc_w_ * x + enc_b_.col(0)).array().tanh().matrix();
    const VectorXd mu = mu_w_ * h1 + mu_b_.col(0);
    const VectorXd logvar = logvar_w_ * h1 + logvar_b_.col(0);
    const VectorXd h2 = (dec_w_ * mu + dec_b_.col(0)).array().tanh().matrix();
    const VectorXd xhat = sigmoid(out_w_ * h2 + out_b_.col(0));
    const double recon = (xhat - x).squaredNorm() / static_cast<double>(x.size());
    const double kl = -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
    return std::max(0.0, recon + cfg_.kl_weight * std::max(0.0, kl));
}

double VaeModel::reconstruction_error(const Image& img) const { return score(vae_input(img, cfg_.input_side)); }

json VaeModel::to_json() const {
    json blocks = json::object();
    const auto params = parameters();
    for (std::size_t i = 0; i < params.size(); ++i) blocks[kBlockNames[i]] = matrix_to_json(*params[i]);
    return {{"format", "pairval-vae"}, {"version", 1}, {"config", cfg_.to_json()}, {"weights", blocks}};
}

VaeModel VaeModel::from_json(const json& j) {
    require(j.value("format", "") == "pairval-vae" && j.value("version", 0) == 1, ErrorCode::parse,
            "not a version-1 pairval VAE model");
    VaeModel m;
    m.cfg_ = VaeConfig::from_json(j.at("config"));
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = matrix_from_json(j.at("weights").at(kBlockNames[i]));
    const int d = m.cfg_.input_dim();
    require(m.enc_w_.rows() == m.cfg_.hidden && m.enc_w_.cols() == d && m.out_w_.rows() == d &&
                m.mu_w_.rows() == m.cfg_.latent,
            ErrorCode::parse, "VAE weights do not match the configuration");
    return m;
}

VaeModel train_vae_on_inputs(const MatrixXd& inputs, const VaeConfig& cfg, VaeTrainingLog* log) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(inputs.cols());
    require(n >= cfg.min_images, ErrorCode::invalid_argument,
            "VAE training needs at least " + std::to_string(cfg.min_images) + " images, got " + std::to_string(n));
    require(inputs.rows() == cfg.input_dim(), ErrorCode::dimension_mismatch, "VAE inputs have the wrong length");

    VaeModel model(cfg);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw_noise = [&](Eigen::Index cols) {
        MatrixXd e(cfg.latent, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index r = 0; r < e.rows(); ++r) e(r, c) = gauss(rng);
        }
        return e;
    };

    if (log != nullptr) {
        log->epoch_losses.clear();
        log->initial_loss = model.loss(inputs, MatrixXd::Zero(cfg.latent, inputs.cols()));
    }

    auto params = model.parameters();
    std::vector<MatrixXd> m1;
    std::vector<MatrixXd> m2;
    for (auto* p : params) {
        m1.push_back(MatrixXd::Zero(p->rows(), p->cols()));
        m2.push_back(MatrixXd::Zero(p->rows(), p->cols()));
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kAdamEps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    VaeGradients grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            MatrixXd batch(inputs.rows(), static_cast<Eigen::Index>(count));
            for (std::size_t i = 0; i < count; ++i) batch.col(static_cast<Eigen::Index>(i)) = inputs.col(order[start + i]);
            const double l = model.loss(batch, draw_noise(static_cast<Eigen::Index>(count)), &grad);
            require(std::isfinite(l), ErrorCode::numeric,
                    "VAE loss became non-finite at epoch " + std::to_string(epoch) + "; lower the learning rate");
            epoch_loss += l * static_cast<double>(count);
            seen += count;
            ++step;
            const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params.size(); ++p) {
                m1[p] = kBeta1 * m1[p] + (1.0 - kBeta1) * grad[p];
                m2[p] = kBeta2 * m2[p] + (1.0 - kBeta2) * grad[p].cwiseProduct(grad[p]);
                params[p]->array() -=
                    cfg.learning_rate * (m1[p].array() / c1) / ((m2[p].array() / c2).sqrt() + kAdamEps);
            }
        }
        if (log != nullptr) log->epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
    }
    return model;
}

VaeModel train_vae(std::span<const Image> originals, const VaeConfig& cfg, VaeTrainingLog* log) {
    require(originals.size() >= cfg.min_images, ErrorCode::invalid_argument,
            "VAE training needs at least " + std::to_string(cfg.min_images) + " images, got " +
                std::to_string(originals.size()));
    MatrixXd inputs(cfg.input_dim(), static_cast<Eigen::Index>(originals.size()));
    for (std::size_t i = 0; i < originals.size(); ++i) {
        inputs.col(static_cast<Eigen::Index>(i)) = vae_input(originals[i], cfg.input_side);
    }
    return train_vae_on_inputs(inputs, cfg, log);
}

}  // namespace pairval::features
