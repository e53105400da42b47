#pragma once

#include "toxlex/corpus.hpp"
#include "toxlex/error.hpp"
#include "toxlex/expand.hpp"
#include "toxlex/labels.hpp"
#include "toxlex/lexicon.hpp"
#include "toxlex/matcher.hpp"
#include "toxlex/pattern.hpp"
#include "toxlex/privacy.hpp"
#include "toxlex/scorer.hpp"
#include "toxlex/service.hpp"
#include "toxlex/textnorm.hpp"
