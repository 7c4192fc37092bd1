#include "ccbir/hyperparams.hpp"

#include "ccbir/common.hpp"

namespace ccbir {

void Hyperparams::validate() const {
    if (learning_rate <= 0.0) {
        throw ConfigError("hyperparams: learning_rate must be > 0");
    }
    if (epochs < 1) throw ConfigError("hyperparams: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("hyperparams: batch_size must be >= 1");
    if (margin < 0.0 || margin > 1.0) {
        throw ConfigError("hyperparams: margin must be in [0,1]");
    }
    if (l_kcm < 0.0 || l_kcm > 1.0) {
        throw ConfigError("hyperparams: l_kcm must be in [0,1]");
    }
    if (optimizer != "adam") {
        throw ConfigError("hyperparams: unsupported optimizer '" + optimizer +
                          "'");
    }
}

}  // namespace ccbir
