#pragma once

#include "chronorec/config.hpp"
#include "chronorec/corpus.hpp"
#include "chronorec/decoding.hpp"
#include "chronorec/engine.hpp"
#include "chronorec/error.hpp"
#include "chronorec/evaluation.hpp"
#include "chronorec/identifiers.hpp"
#include "chronorec/prompting.hpp"
#include "chronorec/scoring.hpp"
#include "chronorec/synthetic.hpp"
#include "chronorec/transition.hpp"
#include "chronorec/trend.hpp"
#include "chronorec/trie.hpp"
#include "chronorec/util.hpp"
