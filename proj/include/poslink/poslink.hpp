#pragma once

#include "poslink/cli.hpp"
#include "poslink/corpus.hpp"
#include "poslink/error.hpp"
#include "poslink/eval.hpp"
#include "poslink/features.hpp"
#include "poslink/io.hpp"
#include "poslink/log.hpp"
#include "poslink/models/model.hpp"
#include "poslink/parallel.hpp"
#include "poslink/random.hpp"
#include "poslink/report.hpp"
#include "poslink/special_functions.hpp"
#include "poslink/stats.hpp"
#include "poslink/synth.hpp"
#include "poslink/tagger.hpp"
#include "poslink/tagset.hpp"
#include "poslink/unicode.hpp"
