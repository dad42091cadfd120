#ifndef FF_H
#define FF_H

/* ff_alphabet is reserved for a later release. */
int ff_alpha(int v);
int ff_beta(int v);
int ff_gamma(int v);
#define FF_DELTA(v) ff_delta(v)

#endif
