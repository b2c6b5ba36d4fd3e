#pragma once

#include <functional>
#include <vector>

#include "ids4nr/dataset.hpp"
#include "ids4nr/model.hpp"

namespace ids4nr {

struct TrainHistory {
    struct Epoch {
        double loss = 0.0;   // mean joint loss over the epoch's examples
        double l_rec = 0.0;  // recommendation component
        double l_ss = 0.0;   // self-supervision component (0 when disabled)
        double seconds = 0.0;
    };
    std::vector<Epoch> epochs;
};

// Adam with sparse row updates for embedding tables: only rows that received
// gradient in a step are updated (standard lazy application for embeddings);
// dense parameters are stepped whenever touched. beta1=0.9, beta2=0.999,
// eps=1e-8.
class Adam {
public:
    Adam(std::vector<Tensor*> params, double lr);

    // Applies one step over the touched (tensor, row) list from the tape and
    // zeroes those gradients. Rows listed as -1 update the whole tensor.
    void step(const std::vector<std::pair<Tensor*, int>>& touched);

    long steps_taken() const { return t_; }

private:
    struct Slot {
        Tensor* tensor;
        std::vector<double> m;
        std::vector<double> v;
    };
    std::vector<Slot> slots_;
    std::unordered_map<Tensor*, int> index_;
    double lr_;
    long t_ = 0;
    std::vector<std::pair<Tensor*, int>> work_;
};

// Runs cfg.epochs passes over the training positives. Throws DivergenceError
// when the loss becomes non-finite.
TrainHistory train(ModelState& model, const Split& split, const Dataset& data,
                   const std::function<void(int, const TrainHistory::Epoch&)>&
                       on_epoch = nullptr);

// Analytic vs central finite-difference gradients of the joint batch loss,
// over every trainable scalar (frozen cold rows excluded). Returns the
// maximum relative error. Meant for small models and batches.
double gradient_check(ModelState& model, const Dataset& data,
                      const TrainBatch& batch, double eps = 1e-4);

}  // namespace ids4nr
