// Copyright 2026 the modalign authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include "modalign/common.hpp"

namespace modalign {

// The single source of truth for the token id layout. V is the number of
// content tokens.
//
//   0          CTC blank
//   1 .. V     content tokens (the only ids utterances contain)
//   V+1        MLM mask token
//   V+2        BOS (decoder input start)
//   V+3        EOS (decoder output end)
//   V+4        PAD (reserved; single-utterance steps never pad)
//
// The shared projection head covers exactly {0 .. V}: blank plus content.
// Mask/BOS/EOS/PAD are embedding-table rows only, never head predictions.
// The decoder's own output head covers the full table so ids never need
// remapping between components.
struct Vocab {
  int content = 0;  // V

  explicit Vocab(int content_tokens) : content(content_tokens) {
    if (content < 1) throw ContractError("Vocab: need at least one content token");
  }

  static constexpr int kBlankId = 0;
  int head_classes() const { return content + 1; }  // blank + content
  int mask_id() const { return content + 1; }
  int bos_id() const { return content + 2; }
  int eos_id() const { return content + 3; }
  int pad_id() const { return content + 4; }
  int table_rows() const { return content + 5; }

  bool is_content(int id) const { return id >= 1 && id <= content; }

  std::string token_string(int id) const {
    if (id == kBlankId) return "<blank>";
    if (id == mask_id()) return "<mask>";
    if (id == bos_id()) return "<bos>";
    if (id == eos_id()) return "<eos>";
    if (id == pad_id()) return "<pad>";
    return "t" + std::to_string(id);
  }
};

}  // namespace modalign
