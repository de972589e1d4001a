#pragma once

#include "reidesort/diagram.hpp"

// KDF v1: line-based text format for diagrams.
//
//   kdf 1
//   crossing c1 rot d1 d2 d3 d4 over d1
//   edge e1 d2 d7
//   loop L1 face outer ccw
//   outer d3
//   place piece:d9 face d5
//   alloc dart=20 crossing=5 edge=9 loop=3
//
// `#` starts a comment. `rot` lists the four darts in ccw order; `over`
// names either dart of the over passage. Edges are directed tail, head.
// `outer dX` and `place piece:dX face <ref>` both place the piece
// containing X with external orbit face(X); `outer` pins it to the
// unbounded face. The optional `alloc` line raises the fresh-id counters
// when they exceed every used id + 1.

namespace reidesort {

Diagram parse_kdf(const std::string& text);
std::string serialize_kdf(const Diagram& d);

// serialize_kdf of the canonical relabeling: byte-stable across any
// relabeling of isomorphic inputs
std::string canonical_kdf(const Diagram& d);

}  // namespace reidesort
