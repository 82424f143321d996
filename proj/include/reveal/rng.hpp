#pragma once

#include <cstdint>

namespace reveal
{

/*! \brief Deterministic pseudo-random generator (xoshiro256**).
 *
 * Seeded runs reproduce bit-identically across platforms; the standard
 * library distributions are implementation-defined, so everything that
 * needs stable golden values goes through this class.
 */
class rng
{
public:
  explicit rng( uint64_t seed = 1 )
  {
    // splitmix64 expansion of the seed into the xoshiro state
    uint64_t x = seed;
    for ( auto& s : state_ )
    {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = ( z ^ ( z >> 30 ) ) * 0xbf58476d1ce4e5b9ull;
      z = ( z ^ ( z >> 27 ) ) * 0x94d049bb133111ebull;
      s = z ^ ( z >> 31 );
    }
  }

  uint64_t next_u64()
  {
    uint64_t const result = rotl( state_[1] * 5, 7 ) * 9;
    uint64_t const t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl( state_[3], 45 );
    return result;
  }

  /*! \brief Uniform integer in [0, bound). bound must be positive. */
  uint64_t next_below( uint64_t bound )
  {
    // multiply-shift rejection-free mapping is fine for test-scale use
    return static_cast<uint64_t>( ( static_cast<unsigned __int128>( next_u64() ) * bound ) >> 64 );
  }

  /*! \brief Uniform double in [0, 1). */
  double next_double()
  {
    return static_cast<double>( next_u64() >> 11 ) * 0x1.0p-53;
  }

  /*! \brief Uniform double in [-a, a]. */
  double next_symmetric( double a )
  {
    return ( 2.0 * next_double() - 1.0 ) * a;
  }

  bool next_bool()
  {
    return ( next_u64() >> 63 ) != 0;
  }

private:
  static uint64_t rotl( uint64_t x, int k )
  {
    return ( x << k ) | ( x >> ( 64 - k ) );
  }

  uint64_t state_[4];
};

} // namespace reveal
