__int64 __fastcall ssl3_read_record(__int64 a1, void *a2)
{
  unsigned int v2; // ebx

  v2 = *(_DWORD *)(a1 + 4);
  if ( v2 > 0x3FFF )
  {
    ssl3_send_alert(*(_QWORD *)(a1 + 40), 2LL, 22LL);
    return 0xFFFFFFFFLL;
  }
  memcpy(a2, *(const void **)(a1 + 16), v2);
  *(_DWORD *)(a1 + 32) = 1;
  return v2;
}
