#pragma once

// Layer-by-layer output shapes of the full-width networks, written out by hand for the two
// image sizes in use. Batch 16, three channels.

#include <vector>

#include "ctsynth/tensor.hpp"

namespace oracle {

using ctsynth::Shape;

inline std::vector<Shape> discriminator_table(int image_size) {
  if (image_size == 40) {
    return {{16, 20, 20, 256}, {16, 20, 20, 128}, {16, 20, 20, 64}, {16, 20, 20, 32},
            {16, 12800},       {16, 128},         {16, 1}};
  }
  return {{16, 32, 32, 256}, {16, 32, 32, 128}, {16, 32, 32, 64}, {16, 32, 32, 32},
          {16, 32768},       {16, 128},         {16, 1}};
}

inline std::vector<Shape> generator_table(int image_size) {
  if (image_size == 40) {
    return {{16, 10, 10, 1},  {16, 20, 20, 256}, {16, 40, 40, 128}, {16, 40, 40, 64},
            {16, 40, 40, 32}, {16, 40, 40, 16},  {16, 40, 40, 3}};
  }
  return {{16, 16, 16, 1},  {16, 32, 32, 256}, {16, 64, 64, 128}, {16, 64, 64, 64},
          {16, 64, 64, 32}, {16, 64, 64, 16},  {16, 64, 64, 3}};
}

inline int noise_dim_for(int image_size) { return image_size == 40 ? 100 : 256; }

}  // namespace oracle
