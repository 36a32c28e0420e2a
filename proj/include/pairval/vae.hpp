#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "pairval/types.hpp"

namespace pairval::features {

struct VaeConfig {
    int input_side = 32;  // inputs are bilinear-resized to input_side x input_side gray
    int hidden = 128;
    int latent = 16;
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 32;
    double kl_weight = 1.0;
    std::uint64_t seed = 7;
    std::size_t min_images = 10;

    int input_dim() const { return input_side * input_side; }
    void validate() const;
    nlohmann::json to_json() const;
    static VaeConfig from_json(const nlohmann::json& j);
};

/// Grayscale, bilinear resize to side x side, scaled to [0, 1].
Eigen::VectorXd vae_input(const Image& img, int side);

/// One block per model parameter, in parameters() order.
using VaeGradients = std::vector<Eigen::MatrixXd>;

/// Encoder: tanh hidden layer -> (mu, log sigma^2). Decoder: tanh hidden -> sigmoid.
/// Loss per sample: mean squared reconstruction error + kl_weight * KL(q(z|x) || N(0, I)).
class VaeModel {
public:
    VaeModel() = default;
    /// Xavier-uniform weights drawn from cfg.seed.
    explicit VaeModel(const VaeConfig& cfg);

    const VaeConfig& config() const { return cfg_; }

    /// Mean loss over the columns of `x` using reparameterization noise `noise`
    /// (latent x batch). Fills `grad` with the gradient of that mean when non-null.
    double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& noise, VaeGradients* grad = nullptr) const;

    /// Deterministic score of one input vector: reconstruction MSE + kl_weight * KL, with z = mu.
    double score(const Eigen::VectorXd& x) const;
    /// score() of the resized image.
    double reconstruction_error(const Image& img) const;

    /// Every parameter block in a fixed order (weights then biases per layer).
    std::vector<Eigen::MatrixXd*> parameters();
    std::vector<const Eigen::MatrixXd*> parameters() const;

    nlohmann::json to_json() const;
    static VaeModel from_json(const nlohmann::json& j);

private:
    VaeConfig cfg_;
    // Biases are stored as single-column matrices so every block has one type.
    Eigen::MatrixXd enc_w_, enc_b_, mu_w_, mu_b_, logvar_w_, logvar_b_, dec_w_, dec_b_, out_w_, out_b_;
};

struct VaeTrainingLog {
    double initial_loss = 0.0;           // mean loss over the data before the first update
    std::vector<double> epoch_losses;    // mean minibatch loss per epoch
};

/// Adam on minibatches; single threaded and deterministic for a given cfg.seed.
/// Throws on fewer than cfg.min_images images or a non-finite loss.
VaeModel train_vae(std::span<const Image> originals, const VaeConfig& cfg, VaeTrainingLog* log = nullptr);
VaeModel train_vae_on_inputs(const Eigen::MatrixXd& inputs, const VaeConfig& cfg, VaeTrainingLog* log = nullptr);

}  // namespace pairval::features
