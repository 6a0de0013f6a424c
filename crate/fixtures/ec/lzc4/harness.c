#include <assert.h>
#include <stdint.h>

struct module_lzc4 {
    uint8_t x;
    uint8_t count;
};
extern struct module_lzc4 rtl;

uint8_t lzc4(uint8_t x);

int main(void)
{
    uint8_t x;
    __CPROVER_assume(x < 16 && rtl.x == x);
    uint8_t c_result = lzc4(x);
    assert(c_result == rtl.count);
    return 0;
}
