#pragma once

#include <ostream>
#include <string>

#include "hdcn/copier.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

// One JSON object per decoding step:
//   {dialogue_id, slot, turn, step, p_gen, beta: [..], alpha: [[..]], gamma: [[..]]}
std::string trace_step_json(const std::string& dialogue_id, const std::string& slot, std::size_t turn,
                            std::size_t step, const StepTrace& s);

// Writes the traces of every slot for each dialogue's final prefix, or for
// real turn `turn` when nonzero (dialogues shorter than that are skipped).
// Returns the number of lines written.
std::size_t dump_attention(Model& model, const Corpus& corpus, std::ostream& out, std::size_t turn = 0);

}  // namespace hdcn
