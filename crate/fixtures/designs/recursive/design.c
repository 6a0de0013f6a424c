#include <stdint.h>

uint8_t odd_steps(uint8_t n);

uint8_t even_steps(uint8_t n)
{
    return n == 0 ? 0 : odd_steps(n - 1) + 1;
}

uint8_t odd_steps(uint8_t n)
{
    return n == 0 ? 1 : even_steps(n - 1);
}
