#pragma once

#include <limits>

#include "avse/core/error.hpp"

namespace avse::train {

// Halves the learning rate after `patience` consecutive epochs without a
// strict improvement of the best validation loss.
struct PlateauSchedule {
  int patience = 5;
  double factor = 0.5;
  double best = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  PlateauSchedule() = default;
  PlateauSchedule(int patience_, double factor_) : patience(patience_), factor(factor_) {
    if (patience < 1) throw ConfigError("plateau patience must be at least 1");
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("lr factor must lie in (0, 1)");
  }

  // Returns true when `lr` was reduced.
  bool update(double val_loss, double& lr) {
    if (val_loss < best) {
      best = val_loss;
      stale_epochs = 0;
      return false;
    }
    if (++stale_epochs < patience) return false;
    lr *= factor;
    stale_epochs = 0;
    return true;
  }
};

}  // namespace avse::train
