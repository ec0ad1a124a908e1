#pragma once

#define SFLAB_VERSION "0.1.0"
