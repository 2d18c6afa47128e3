int main()
{
    unsigned int n = unknown_uint();
    unsigned int x = n, y = 0;

    while (x > 0)
    {
        x--;
        y++;
    }

    assert(y == n);
    return 0;
}
